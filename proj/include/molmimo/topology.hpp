#pragma once

// Geometry of the 2x2 setup: two point transmit antennas and two absorbing
// spherical receive antennas whose centers form a rectangle in the x-y plane.
//
//   Tx1 = (0, 0, 0)            Rx1 center = (d + r_r, 0, 0)
//   Tx2 = (0, 2*r_r + h, 0)    Rx2 center = (d + r_r, 2*r_r + h, 0)
//
// so the Tx_i -> Rx_i center-to-surface distance is d on both pair links.

#include <cmath>
#include <stdexcept>
#include <string>

namespace molmimo {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
};

struct Topology {
    double d = 2.0;   // Tx-Rx surface gap on the pair link (um)
    double h = 2.0;   // receive-antenna surface separation (um)
    double r_r = 4.0; // receive-antenna radius (um)
    double D = 50.0;  // diffusion coefficient (um^2/s)

    Vec3 tx1() const { return {0.0, 0.0, 0.0}; }
    Vec3 tx2() const { return {0.0, 2.0 * r_r + h, 0.0}; }
    Vec3 rx1_center() const { return {d + r_r, 0.0, 0.0}; }
    Vec3 rx2_center() const { return {d + r_r, 2.0 * r_r + h, 0.0}; }

    // Center-to-surface distances used by the channel model.
    double pair_distance() const { return d; }
    double cross_distance() const {
        const double sep = 2.0 * r_r + h;
        return std::sqrt((d + r_r) * (d + r_r) + sep * sep) - r_r;
    }

    // D == 0 is tolerated (degenerate, nothing ever moves); analytic and
    // fitting code additionally requires D > 0.
    void validate() const {
        if (!(d > 0.0)) throw std::invalid_argument("topology: d must be > 0");
        if (!(h >= 0.0)) throw std::invalid_argument("topology: h must be >= 0");
        if (!(r_r > 0.0)) throw std::invalid_argument("topology: r_r must be > 0");
        if (!(D >= 0.0)) throw std::invalid_argument("topology: D must be >= 0");
        // Tx points must lie strictly outside both spheres.
        for (const Vec3& tx : {tx1(), tx2()}) {
            for (const Vec3& c : {rx1_center(), rx2_center()}) {
                if ((tx - c).norm2() <= r_r * r_r)
                    throw std::invalid_argument("topology: transmit antenna inside a receive sphere");
            }
        }
    }
};

} // namespace molmimo
