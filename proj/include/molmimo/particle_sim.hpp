#pragma once

// 3-D Brownian first-hitting simulator.  Molecules take independent Gaussian
// steps (variance 2*D*dt per axis) and are absorbed the first time a step
// ends inside one of the receive spheres; each absorbed molecule contributes
// exactly one hitting record.  Absorption is tested at step ends only, which
// matches the dt = 1 ms reference simulations the channel model was fitted
// against (see README for the measured discretization bias).

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <vector>

#include "molmimo/math/rng.hpp"
#include "molmimo/topology.hpp"

namespace molmimo {

struct SimConfig {
    double dt = 1e-3;                // time step (s)
    double t_max = 1.5;              // simulation horizon (s)
    int molecules_per_emission = 5000;
    int replications = 500;
    std::uint64_t rng_seed = 1;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("sim: dt must be > 0");
        if (!(t_max >= dt)) throw std::invalid_argument("sim: t_max must be >= dt");
        if (molecules_per_emission < 1) throw std::invalid_argument("sim: molecules >= 1");
        if (replications < 1) throw std::invalid_argument("sim: replications >= 1");
    }
};

enum class TxAntenna : std::uint8_t { tx1 = 1, tx2 = 2 };
enum class RxAntenna : std::uint8_t { rx1 = 1, rx2 = 2 };

struct HittingRecord {
    TxAntenna source;
    RxAntenna sink;
    double hit_time; // seconds, in (0, t_max]
};

inline bool record_order(const HittingRecord& a, const HittingRecord& b) {
    return std::tuple(a.source, a.sink, a.hit_time) < std::tuple(b.source, b.sink, b.hit_time);
}

struct AbsorbingSphere {
    Vec3 center;
    double radius = 0.0;
};

// One diffusion step: each coordinate moves by an independent N(0, 2*D*dt).
template <class Rng>
inline Vec3 step_particle(Vec3 pos, double dt, double D, Rng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("step_particle: dt must be > 0");
    if (D == 0.0) return pos;
    std::normal_distribution<double> step(0.0, std::sqrt(2.0 * D * dt));
    return {pos.x + step(rng), pos.y + step(rng), pos.z + step(rng)};
}

// Walks one molecule until absorption or t_max; returns (sphere index, time)
// or (-1, t_max) if it never hits.
template <class Rng>
inline std::pair<int, double> walk_to_absorption(Vec3 pos, std::span<const AbsorbingSphere> spheres,
                                                 const SimConfig& cfg, double D, Rng& rng) {
    if (D == 0.0) return {-1, cfg.t_max};
    const long steps = std::lround(cfg.t_max / cfg.dt);
    std::normal_distribution<double> step(0.0, std::sqrt(2.0 * D * cfg.dt));
    for (long s = 1; s <= steps; ++s) {
        pos.x += step(rng);
        pos.y += step(rng);
        pos.z += step(rng);
        for (std::size_t i = 0; i < spheres.size(); ++i) {
            const Vec3 rel = pos - spheres[i].center;
            if (rel.norm2() <= spheres[i].radius * spheres[i].radius)
                return {static_cast<int>(i), static_cast<double>(s) * cfg.dt};
        }
    }
    return {-1, cfg.t_max};
}

// Simulates one emission of cfg.molecules_per_emission molecules from the
// given source.  Molecule m of replication r draws from the substream
// (seed; r, source, m), so records do not depend on execution order; they are
// returned sorted by (source, sink, hit_time).
inline std::vector<HittingRecord> simulate_emission(const Topology& topo, TxAntenna source,
                                                    const SimConfig& cfg, int replication = 0) {
    topo.validate();
    cfg.validate();
    const std::array<AbsorbingSphere, 2> spheres{
        AbsorbingSphere{topo.rx1_center(), topo.r_r},
        AbsorbingSphere{topo.rx2_center(), topo.r_r},
    };
    const Vec3 origin = source == TxAntenna::tx1 ? topo.tx1() : topo.tx2();
    for (const auto& sp : spheres)
        if ((origin - sp.center).norm2() <= sp.radius * sp.radius)
            throw std::invalid_argument("simulate_emission: source inside a receive sphere");

    std::vector<HittingRecord> records;
    records.reserve(cfg.molecules_per_emission);
    for (int m = 0; m < cfg.molecules_per_emission; ++m) {
        SplitMix64 rng = substream(cfg.rng_seed, {static_cast<std::uint64_t>(replication),
                                                  static_cast<std::uint64_t>(source),
                                                  static_cast<std::uint64_t>(m)});
        auto [sphere, t] = walk_to_absorption(origin, spheres, cfg, topo.D, rng);
        if (sphere >= 0)
            records.push_back({source, sphere == 0 ? RxAntenna::rx1 : RxAntenna::rx2, t});
    }
    std::sort(records.begin(), records.end(), record_order);
    return records;
}

struct ChannelSimResult {
    std::vector<HittingRecord> records; // all replications, both sources
    long n_emitted_per_source = 0;
};

// Runs cfg.replications emissions from both sources, replications in
// parallel.  Output is canonically sorted, hence identical for any job count.
inline ChannelSimResult run_channel_simulation(const Topology& topo, const SimConfig& cfg,
                                               unsigned jobs = 0) {
    topo.validate();
    cfg.validate();
    if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());

    struct Task {
        TxAntenna source;
        int replication;
    };
    std::vector<Task> tasks;
    tasks.reserve(2 * cfg.replications);
    for (int r = 0; r < cfg.replications; ++r) {
        tasks.push_back({TxAntenna::tx1, r});
        tasks.push_back({TxAntenna::tx2, r});
    }

    std::vector<std::vector<HittingRecord>> partial(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            partial[i] = simulate_emission(topo, tasks[i].source, cfg, tasks[i].replication);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    ChannelSimResult out;
    out.n_emitted_per_source =
        static_cast<long>(cfg.molecules_per_emission) * static_cast<long>(cfg.replications);
    std::size_t total = 0;
    for (const auto& p : partial) total += p.size();
    out.records.reserve(total);
    for (const auto& p : partial) out.records.insert(out.records.end(), p.begin(), p.end());
    std::sort(out.records.begin(), out.records.end(), record_order);
    return out;
}

struct EmpiricalCdf {
    std::vector<double> time_grid; // ascending (s)
    std::vector<double> fraction;  // hitting fraction in [0,1], nondecreasing
    long n_emitted = 0;
};

inline std::vector<double> default_time_grid(double t_max, double resolution = 1e-3) {
    std::vector<double> grid;
    const long n = std::lround(t_max / resolution);
    grid.reserve(n);
    for (long i = 1; i <= n; ++i) grid.push_back(static_cast<double>(i) * resolution);
    return grid;
}

struct CdfSet {
    EmpiricalCdf f11, f12, f21, f22; // F_ij: molecules from Tx_j absorbed at Rx_i
};

namespace detail {

inline EmpiricalCdf cdf_from_times(std::vector<double> times, long n_emitted,
                                   const std::vector<double>& grid) {
    std::sort(times.begin(), times.end());
    EmpiricalCdf cdf;
    cdf.time_grid = grid;
    cdf.n_emitted = n_emitted;
    cdf.fraction.resize(grid.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        while (pos < times.size() && times[pos] <= grid[i]) ++pos;
        cdf.fraction[i] = n_emitted > 0 ? static_cast<double>(pos) / n_emitted : 0.0;
    }
    return cdf;
}

} // namespace detail

// Splits records by (source, sink) and turns counts into hitting fractions,
// fraction(t) = #(hit_time <= t) / n_emitted_per_source.
inline CdfSet estimate_cdfs(std::span<const HittingRecord> records, long n_emitted_per_source,
                            const std::vector<double>& time_grid) {
    if (time_grid.empty()) throw std::invalid_argument("estimate_cdfs: empty grid");
    for (std::size_t i = 1; i < time_grid.size(); ++i)
        if (!(time_grid[i] > time_grid[i - 1]))
            throw std::invalid_argument("estimate_cdfs: grid must ascend");

    std::vector<double> t11, t12, t21, t22;
    for (const auto& r : records) {
        const bool from1 = r.source == TxAntenna::tx1;
        const bool at1 = r.sink == RxAntenna::rx1;
        (from1 ? (at1 ? t11 : t21) : (at1 ? t12 : t22)).push_back(r.hit_time);
    }
    CdfSet set;
    set.f11 = detail::cdf_from_times(std::move(t11), n_emitted_per_source, time_grid);
    set.f12 = detail::cdf_from_times(std::move(t12), n_emitted_per_source, time_grid);
    set.f21 = detail::cdf_from_times(std::move(t21), n_emitted_per_source, time_grid);
    set.f22 = detail::cdf_from_times(std::move(t22), n_emitted_per_source, time_grid);
    return set;
}

// Emission-count weighted pointwise average of two symmetric link estimates
// (F11 with F22, or F12 with F21).
inline EmpiricalCdf pool_symmetric(const EmpiricalCdf& a, const EmpiricalCdf& b) {
    if (a.time_grid != b.time_grid)
        throw std::invalid_argument("pool_symmetric: time grids differ");
    EmpiricalCdf out;
    out.time_grid = a.time_grid;
    out.n_emitted = a.n_emitted + b.n_emitted;
    out.fraction.resize(a.fraction.size());
    const double wa = static_cast<double>(a.n_emitted);
    const double wb = static_cast<double>(b.n_emitted);
    if (!(wa + wb > 0.0)) throw std::invalid_argument("pool_symmetric: no emissions");
    for (std::size_t i = 0; i < out.fraction.size(); ++i)
        out.fraction[i] = (wa * a.fraction[i] + wb * b.fraction[i]) / (wa + wb);
    return out;
}

} // namespace molmimo
