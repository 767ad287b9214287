#pragma once

// Analytic and fitted first-hitting CDFs.
//
// The single-receiver closed form is
//     F(t | r_r, d, D) = r_r/(r_r+d) * erfc(d / sqrt(4*D*t)),
// and the fitted two-receiver model generalizes it with three coefficients:
//     F_ij(t) = b1*r_r/(d_ij+r_r) * erfc(d_ij / ((4D)^b2 * t^b3)).
// The pair link uses d_ij = d, the cross link the rectangle diagonal minus r_r.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "molmimo/math/special.hpp"
#include "molmimo/particle_sim.hpp"
#include "molmimo/topology.hpp"

namespace molmimo {

enum class LinkClass { pair, cross };

inline const char* to_string(LinkClass c) { return c == LinkClass::pair ? "pair" : "cross"; }

// Closed-form single-receiver hitting CDF.
inline double siso_cdf(double t, double r_r, double d, double D) {
    if (!(r_r > 0.0) || !(d > 0.0) || !(D > 0.0))
        throw std::invalid_argument("siso_cdf: need r_r, d, D > 0");
    if (t < 0.0) throw std::invalid_argument("siso_cdf: need t >= 0");
    if (t == 0.0) return 0.0;
    return r_r / (r_r + d) * molmimo::erfc(d / std::sqrt(4.0 * D * t));
}

struct ChannelModelParams {
    double b1 = 1.0;
    double b2 = 0.5;
    double b3 = 0.5;
    LinkClass link_class = LinkClass::pair;

    bool within_bounds() const {
        return b1 > 0.0 && b1 <= 1.5 && b2 > 0.0 && b2 <= 1.5 && b3 > 0.0 && b3 <= 1.5;
    }
};

// Fitted model CDF; reduces to siso_cdf for (b1,b2,b3) = (1, 0.5, 0.5).
inline double model_cdf(double t, const ChannelModelParams& p, double d_ij, double r_r, double D) {
    if (t < 0.0) throw std::invalid_argument("model_cdf: need t >= 0");
    if (t == 0.0) return 0.0;
    const double u = d_ij / (std::pow(4.0 * D, p.b2) * std::pow(t, p.b3));
    return p.b1 * r_r / (d_ij + r_r) * molmimo::erfc(u);
}

inline double model_cdf(double t, const ChannelModelParams& p, const Topology& topo) {
    const double d_ij = p.link_class == LinkClass::pair ? topo.pair_distance() : topo.cross_distance();
    return model_cdf(t, p, d_ij, topo.r_r, topo.D);
}

// t -> infinity limit of the model CDF (erfc argument goes to 0).
inline double model_cdf_limit(const ChannelModelParams& p, double d_ij, double r_r) {
    return p.b1 * r_r / (d_ij + r_r);
}

inline double model_cdf_limit(const ChannelModelParams& p, const Topology& topo) {
    const double d_ij = p.link_class == LinkClass::pair ? topo.pair_distance() : topo.cross_distance();
    return model_cdf_limit(p, d_ij, topo.r_r);
}

// Link distances d_11 = d and d_12 = d_21 = sqrt((d+r_r)^2 + (2 r_r + h)^2) - r_r.
inline double cross_distance(const Topology& topo) {
    topo.validate();
    return topo.cross_distance();
}

struct FitResult {
    ChannelModelParams params;
    double residual_rms = 0.0;
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline bool solve3x3(double m[3][3], double rhs[3], double out[3]) {
    int idx[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(m[idx[r]][col]) > std::fabs(m[idx[piv]][col])) piv = r;
        std::swap(idx[col], idx[piv]);
        const double diag = m[idx[col]][col];
        if (std::fabs(diag) < 1e-300) return false;
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[idx[r]][col] / diag;
            for (int c = col; c < 3; ++c) m[idx[r]][c] -= f * m[idx[col]][c];
            rhs[idx[r]] -= f * rhs[idx[col]];
        }
    }
    for (int row = 2; row >= 0; --row) {
        double s = rhs[idx[row]];
        for (int c = row + 1; c < 3; ++c) s -= m[idx[row]][c] * out[c];
        out[row] = s / m[idx[row]][row];
    }
    return true;
}

} // namespace detail

// Damped Gauss-Newton (Levenberg-Marquardt) least-squares fit of the model
// CDF to an empirical CDF, with the analytic Jacobian of the model.
// Starts from (1.0, 0.5, 0.5); converges when the relative parameter change
// drops below 1e-8, gives up after 200 iterations (converged flag false,
// best parameters so far returned).
inline FitResult fit_model(const EmpiricalCdf& cdf, const Topology& topo, double d_ij,
                           LinkClass link_class) {
    if (cdf.time_grid.size() < 50)
        throw std::invalid_argument("fit_model: need at least 50 grid points");
    if (!(topo.D > 0.0)) throw std::invalid_argument("fit_model: need D > 0");

    const std::size_t n = cdf.time_grid.size();
    bool all_zero = true;
    for (double f : cdf.fraction)
        if (f != 0.0) { all_zero = false; break; }
    if (all_zero) throw std::invalid_argument("fit_model: degenerate all-zero CDF");

    const double amp_geom = topo.r_r / (d_ij + topo.r_r);
    const double log4d = std::log(4.0 * topo.D);

    double b[3] = {1.0, 0.5, 0.5};
    auto cost_of = [&](const double p[3]) {
        double c = 0.0;
        ChannelModelParams mp{p[0], p[1], p[2], link_class};
        for (std::size_t i = 0; i < n; ++i) {
            const double r = model_cdf(cdf.time_grid[i], mp, d_ij, topo.r_r, topo.D) - cdf.fraction[i];
            c += r * r;
        }
        return c;
    };

    double lambda = 1e-3;
    double cost = cost_of(b);
    int iter = 0;
    bool converged = false;

    for (; iter < 200; ++iter) {
        // Accumulate J^T J and J^T r.
        double jtj[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
        double jtr[3] = {0, 0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            const double t = cdf.time_grid[i];
            const double u = d_ij / (std::pow(4.0 * topo.D, b[1]) * std::pow(t, b[2]));
            const double e = molmimo::erfc(u);
            const double f = b[0] * amp_geom * e;
            const double r = f - cdf.fraction[i];
            const double g = b[0] * amp_geom * 2.0 * kInvSqrtPi * std::exp(-u * u) * u;
            const double j[3] = {amp_geom * e, g * log4d, g * std::log(t)};
            for (int a = 0; a < 3; ++a) {
                jtr[a] += j[a] * r;
                for (int c = 0; c < 3; ++c) jtj[a][c] += j[a] * j[c];
            }
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 30; ++attempt) {
            double m[3][3];
            double rhs[3] = {-jtr[0], -jtr[1], -jtr[2]};
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 3; ++c) m[a][c] = jtj[a][c] + (a == c ? lambda * jtj[a][a] : 0.0);
            double step[3];
            if (!detail::solve3x3(m, rhs, step)) { lambda *= 10.0; continue; }
            const double cand[3] = {b[0] + step[0], b[1] + step[1], b[2] + step[2]};
            if (!(cand[0] > 0.0) || !(cand[1] > 0.0) || !(cand[2] > 0.0)) { lambda *= 10.0; continue; }
            const double cand_cost = cost_of(cand);
            if (cand_cost <= cost) {
                double rel = 0.0;
                for (int a = 0; a < 3; ++a)
                    rel = std::max(rel, std::fabs(step[a]) / std::max(1e-12, std::fabs(b[a])));
                for (int a = 0; a < 3; ++a) b[a] = cand[a];
                cost = cand_cost;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                if (rel < 1e-8) converged = true;
                break;
            }
            lambda *= 5.0;
        }
        if (converged || !stepped) {
            converged = converged || !stepped; // stalled damping also counts as stationary
            break;
        }
    }

    FitResult out;
    out.params = ChannelModelParams{b[0], b[1], b[2], link_class};
    out.residual_rms = std::sqrt(cost / static_cast<double>(n));
    out.iterations = iter + 1;
    out.converged = converged;
    return out;
}

inline FitResult fit_model(const EmpiricalCdf& cdf, const Topology& topo, LinkClass link_class) {
    const double d_ij =
        link_class == LinkClass::pair ? topo.pair_distance() : topo.cross_distance();
    return fit_model(cdf, topo, d_ij, link_class);
}

// Per-slot hitting probabilities A_k (pair link) and B_k (cross link),
// k = 0..K, where index k counts symbol slots after the emission.
struct SlotProbabilities {
    std::vector<double> A;
    std::vector<double> B;
    double t_s = 0.0;
    int K = 0;
};

inline SlotProbabilities slot_probs(const ChannelModelParams& pair_params,
                                    const ChannelModelParams& cross_params, const Topology& topo,
                                    double t_s, int K) {
    if (!(t_s > 0.0)) throw std::invalid_argument("slot_probs: need t_s > 0");
    if (K < 0) throw std::invalid_argument("slot_probs: need K >= 0");
    const double d11 = topo.pair_distance();
    const double d12 = topo.cross_distance();
    SlotProbabilities sp;
    sp.t_s = t_s;
    sp.K = K;
    sp.A.resize(K + 1);
    sp.B.resize(K + 1);
    for (int k = 0; k <= K; ++k) {
        sp.A[k] = model_cdf((k + 1) * t_s, pair_params, d11, topo.r_r, topo.D) -
                  model_cdf(k * t_s, pair_params, d11, topo.r_r, topo.D);
        sp.B[k] = model_cdf((k + 1) * t_s, cross_params, d12, topo.r_r, topo.D) -
                  model_cdf(k * t_s, cross_params, d12, topo.r_r, topo.D);
    }
    return sp;
}

} // namespace molmimo
