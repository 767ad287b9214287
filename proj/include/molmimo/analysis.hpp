#pragma once

// Error analysis and experiment orchestration: the SIR metric, generalized
// Gaussian fits of detector outputs, the closed-form error probability, the
// quadratic h(Q1) = Q1^2 (sigma_ex0^2 - sigma_in0^2) deciding which practical
// ZF variant has the lower error probability, and the BER sweep harness.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "molmimo/detection.hpp"
#include "molmimo/math/special.hpp"

namespace molmimo {

// --------------------------------------------------------------------------
// SIR: expected desired-slot arrivals over expected ISI + ILI arrivals for a
// one-shot emission, SIR = F11(0,ts) / (F11(ts,inf) + F12(0,inf)).
inline double sir(const ChannelModelParams& pair_params, const ChannelModelParams& cross_params,
                  const Topology& topo, double t_s) {
    if (!(t_s > 0.0)) throw std::invalid_argument("sir: need t_s > 0");
    const double num = model_cdf(t_s, pair_params, topo);
    const double den = (model_cdf_limit(pair_params, topo) - num) + model_cdf_limit(cross_params, topo);
    if (!(den > 0.0)) throw std::domain_error("sir: zero interference denominator");
    return num / den;
}

// --------------------------------------------------------------------------
// Generalized Gaussian distribution with scale alpha and shape beta;
// beta = 2 recovers the Gaussian.  kappa is the distribution kurtosis,
//   kappa(beta) = Gamma(5/b) Gamma(1/b) / Gamma(3/b)^2,
// strictly decreasing in beta, and sigma^2 = alpha^2 Gamma(3/b)/Gamma(1/b).
struct GgdParams {
    double mu = 0.0;
    double alpha = 1.0;
    double beta = 2.0;
    double kappa = 3.0;
    double sigma_sq = 1.0;
};

inline double ggd_kappa(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("ggd_kappa: need beta > 0");
    return std::exp(std::lgamma(5.0 / beta) + std::lgamma(1.0 / beta) - 2.0 * std::lgamma(3.0 / beta));
}

inline double ggd_alpha_from_variance(double sigma_sq, double beta) {
    return std::sqrt(sigma_sq * std::exp(std::lgamma(1.0 / beta) - std::lgamma(3.0 / beta)));
}

// Moment fit: mu and sigma^2 from sample moments, beta from the sample
// kurtosis by bisecting kappa(beta) on [0.5, 20], alpha from the variance
// relation.
inline GgdParams fit_ggd(std::span<const double> samples) {
    if (samples.size() < 10000) throw std::invalid_argument("fit_ggd: need at least 1e4 samples");
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : samples) {
        const double c = v - mean;
        m2 += c * c;
        m4 += c * c * c * c;
    }
    m2 /= n;
    m4 /= n;
    const double kurt = m4 / (m2 * m2);

    double lo = 0.5, hi = 20.0;
    if (kurt > ggd_kappa(lo) || kurt < ggd_kappa(hi))
        throw std::domain_error("fit_ggd: sample kurtosis outside kappa([0.5, 20])");
    while (hi - lo > 1e-8) {
        const double mid = 0.5 * (lo + hi);
        (ggd_kappa(mid) > kurt ? lo : hi) = mid; // kappa decreases in beta
    }
    GgdParams g;
    g.mu = mean;
    g.sigma_sq = m2;
    g.kappa = kurt;
    g.beta = 0.5 * (lo + hi);
    g.alpha = ggd_alpha_from_variance(m2, g.beta);
    return g;
}

// --------------------------------------------------------------------------
// Closed-form error probability at the upper threshold,
//   Pe = f(mu0, a0, b0) + f(mu1, a1, b1),
//   f(mu, alpha, beta) = 1/2 - gamma(1/beta, (|eta - mu|/alpha)^beta) / (2 Gamma(1/beta)),
// valid for eta_plus between the two conditional means.
inline double ggd_tail_term(double mu, double alpha, double beta, double eta_plus) {
    const double z = std::pow(std::fabs(eta_plus - mu) / alpha, beta);
    return 0.5 - lower_incomplete_gamma(1.0 / beta, z) / (2.0 * std::tgamma(1.0 / beta));
}

inline double error_probability(const GgdParams& ggd0, const GgdParams& ggd1, double eta_plus) {
    if (!(ggd0.alpha > 0.0) || !(ggd1.alpha > 0.0))
        throw std::invalid_argument("error_probability: invalid GGD scale");
    if (!(eta_plus >= ggd0.mu && eta_plus <= ggd1.mu))
        throw std::invalid_argument("error_probability: eta_plus must lie between the means");
    return ggd_tail_term(ggd0.mu, ggd0.alpha, ggd0.beta, eta_plus) +
           ggd_tail_term(ggd1.mu, ggd1.alpha, ggd1.beta, eta_plus);
}

// --------------------------------------------------------------------------
// h(Q1) = Q1^2 (sigma_ex0^2 - sigma_in0^2) = a Q1^2 + b Q1 + c.  Under
// acceptable interference (A0^2 > 2 B0^2 and (A0^2 - 2B0^2)/3 > sum of
// squared ISI probabilities) a > 0 and c < 0, so exactly one positive root
// exists; above it the full-matrix practical ZF has the lower variance.
struct QuadraticH {
    double a = 0.0, b = 0.0, c = 0.0;
    double root_positive = 0.0;
    bool ili_condition_ok = false;
    bool isi_condition_ok = false;

    bool acceptable_interference() const { return ili_condition_ok && isi_condition_ok; }
    double eval(double q1) const { return (a * q1 + b) * q1 + c; }
};

// Coefficients a and c have closed forms; b is recovered by evaluating h at
// three points and solving the linear system, then cross-checked against the
// closed forms to 1e-9 relative.
inline QuadraticH h_of_Q1(const SlotProbabilities& probs, double sigma_n, double pi1 = 0.5) {
    const double A0 = probs.A.at(0), B0 = probs.B.at(0);
    const double pi0 = 1.0 - pi1;
    double s2 = 0.0; // sum of A_k^2 + B_k^2, k >= 1
    for (int k = 1; k <= probs.K; ++k) s2 += probs.A[k] * probs.A[k] + probs.B[k] * probs.B[k];

    QuadraticH h;
    h.ili_condition_ok = A0 * A0 - 2.0 * B0 * B0 > 0.0;
    h.isi_condition_ok = (A0 * A0 - 2.0 * B0 * B0) / 3.0 > s2;

    const double den = A0 * A0 - B0 * B0;
    const double delta = 1.0 / (A0 * A0) - (A0 * A0 + B0 * B0) / (den * den);
    const double a_cf = pi0 * pi1 * (B0 * B0 / (A0 * A0) + s2 * delta);
    const double c_cf = sigma_n * sigma_n * delta;

    const double q[3] = {200.0, 500.0, 800.0};
    double m[3][3];
    double rhs[3];
    for (int i = 0; i < 3; ++i) {
        const DetectorStats ex = detector_stats_ex(probs, q[i], pi1, sigma_n);
        const DetectorStats in = detector_stats_in(probs, q[i], pi1, sigma_n);
        rhs[i] = q[i] * q[i] * (ex.sigma0_sq - in.sigma0_sq);
        m[i][0] = q[i] * q[i];
        m[i][1] = q[i];
        m[i][2] = 1.0;
    }
    double abc[3];
    if (!detail::solve3x3(m, rhs, abc)) throw std::runtime_error("h_of_Q1: singular system");
    h.a = abc[0];
    h.b = abc[1];
    h.c = abc[2];

    if (std::fabs(h.a - a_cf) > 1e-9 * std::fabs(a_cf) ||
        std::fabs(h.c - c_cf) > 1e-9 * std::fabs(c_cf))
        throw std::runtime_error("h_of_Q1: closed-form coefficients disagree with interpolation");

    const double disc = h.b * h.b - 4.0 * h.a * h.c;
    if (h.a != 0.0 && disc >= 0.0) {
        const double r1 = (-h.b + std::sqrt(disc)) / (2.0 * h.a);
        const double r2 = (-h.b - std::sqrt(disc)) / (2.0 * h.a);
        h.root_positive = std::max(r1, r2) > 0.0 ? std::max(r1, r2) : 0.0;
        if (h.acceptable_interference() && r1 > 0.0 && r2 > 0.0)
            throw std::runtime_error("h_of_Q1: two positive roots under acceptable interference");
    }
    return h;
}

// --------------------------------------------------------------------------
// Throughput = M * L / t_s * (1 - BER), M modulation order, L spatial streams.
inline double throughput(int M, int L, double t_s, double ber) {
    if (!(ber >= 0.0 && ber <= 1.0)) throw std::invalid_argument("throughput: ber in [0,1]");
    if (!(t_s > 0.0)) throw std::invalid_argument("throughput: t_s > 0");
    return static_cast<double>(M) * static_cast<double>(L) / t_s * (1.0 - ber);
}

// --------------------------------------------------------------------------
// Conditional zf_ex detector outputs for distribution fitting: simulates a
// random-bit link, discards the first K warm-up slots, and splits the scaled
// outputs from both receive antennas by the transmitted bit.
struct ConditionalOutputs {
    std::vector<double> bit0;
    std::vector<double> bit1;
};

inline ConditionalOutputs gather_zf_ex_outputs(const SlotProbabilities& probs, int Q1, double pi1,
                                               double sigma_n, int n_slots, std::uint64_t seed) {
    TxConfig tx;
    tx.Q1 = Q1;
    tx.pi1 = pi1;
    tx.t_s = probs.t_s;
    tx.n_bits = n_slots;
    NoiseConfig noise{sigma_n};
    SplitMix64 rng = substream(seed, {0x9d0u});
    const auto bits1 = random_bits(n_slots, pi1, rng);
    const auto bits2 = random_bits(n_slots, pi1, rng);
    const auto trace = simulate_link(bits1, bits2, tx, probs, noise, rng);
    const double scale = 1.0 / (Q1 * probs.A.at(0));
    ConditionalOutputs out;
    for (const auto& o : trace) {
        if (o.slot < probs.K) continue;
        (o.x1 ? out.bit1 : out.bit0).push_back(o.y1 * scale);
        (o.x2 ? out.bit1 : out.bit0).push_back(o.y2 * scale);
    }
    return out;
}

// --------------------------------------------------------------------------
// BER sweep harness.  Every (t_s, Q1) point simulates `replications`
// independent traces; all requested detectors run on the same trace.  Points
// execute in parallel; seeds derive from (seed, ts index, Q1 index, rep), so
// results are independent of the job count.
struct BerSweepConfig {
    Topology topology;
    ChannelModelParams pair_params{0.9155, 0.5236, 0.5476, LinkClass::pair};
    ChannelModelParams cross_params{0.2981, 0.5315, 0.5363, LinkClass::cross};
    std::vector<double> ts_list{0.08};
    std::vector<int> q1_list{300, 400, 500, 600, 700, 800, 900, 1000};
    double pi1 = 0.5;
    double sigma_n = 10.0;
    int K = 4;
    int bits_per_rep = 50000;
    int replications = 5;
    std::uint64_t seed = 1;
    unsigned jobs = 0;
    std::vector<DetectorKind> detectors{DetectorKind::fixed, DetectorKind::adaptive,
                                        DetectorKind::zf_ex, DetectorKind::zf_in,
                                        DetectorKind::genie};
    double eta_fixed = 0.2;
    bool siso = false; // zero the cross link and send on stream 1 only

    void validate() const {
        topology.validate();
        if (ts_list.empty() || q1_list.empty()) throw std::invalid_argument("ber: empty sweep");
        for (double ts : ts_list)
            if (!(ts > 0.0)) throw std::invalid_argument("ber: t_s > 0");
        for (int q : q1_list)
            if (q < 1) throw std::invalid_argument("ber: Q1 >= 1");
        if (!(pi1 >= 0.0 && pi1 <= 1.0)) throw std::invalid_argument("ber: pi1 in [0,1]");
        if (!(sigma_n >= 0.0)) throw std::invalid_argument("ber: sigma_n >= 0");
        if (K < 0) throw std::invalid_argument("ber: K >= 0");
        if (bits_per_rep < 1 || replications < 1)
            throw std::invalid_argument("ber: bits and replications >= 1");
        if (detectors.empty()) throw std::invalid_argument("ber: no detectors");
        if (!(eta_fixed > 0.0 && eta_fixed < 1.0)) throw std::invalid_argument("ber: eta_f in (0,1)");
    }
};

struct BerPoint {
    DetectorKind detector;
    int Q1 = 0;
    double t_s = 0.0;
    double ber = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double runtime_s = 0.0;
};

namespace detail {

inline double student_t_975(int dof) {
    static constexpr double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                       2.306,  2.262, 2.228, 2.201, 2.179, 2.160, 2.145,
                                       2.131,  2.120, 2.110, 2.101, 2.093, 2.086};
    if (dof < 1) return 0.0;
    if (dof <= 20) return table[dof - 1];
    return 1.96 + 8.0 / (dof * dof); // smooth tail toward the normal quantile
}

} // namespace detail

inline std::vector<BerPoint> run_ber_experiment(const BerSweepConfig& cfg) {
    cfg.validate();

    struct Point {
        std::size_t ts_idx, q1_idx;
    };
    std::vector<Point> points;
    for (std::size_t ti = 0; ti < cfg.ts_list.size(); ++ti)
        for (std::size_t qi = 0; qi < cfg.q1_list.size(); ++qi) points.push_back({ti, qi});

    const std::size_t rows_per_point = cfg.detectors.size();
    std::vector<BerPoint> result(points.size() * rows_per_point);

    auto run_point = [&](std::size_t pi) {
        const auto started = std::chrono::steady_clock::now();
        const double ts = cfg.ts_list[points[pi].ts_idx];
        const int Q1 = cfg.q1_list[points[pi].q1_idx];

        SlotProbabilities probs =
            slot_probs(cfg.pair_params, cfg.cross_params, cfg.topology, ts, cfg.K);
        if (cfg.siso)
            for (auto& b : probs.B) b = 0.0;

        const DetectorStats ex = detector_stats_ex(probs, Q1, cfg.pi1, cfg.sigma_n);
        const DetectorStats in = detector_stats_in(probs, Q1, cfg.pi1, cfg.sigma_n);
        const ThresholdPair tp_ex = threshold_pair(ex);
        const ThresholdPair tp_in = threshold_pair(in);
        const ThresholdPair tp_a = scale_thresholds(tp_ex, probs.A[0]);
        const auto [hbar_ex, hbar_in] = mean_channel_matrices(probs, Q1);

        TxConfig tx;
        tx.Q1 = Q1;
        tx.pi1 = cfg.pi1;
        tx.t_s = ts;
        tx.n_bits = cfg.bits_per_rep;
        NoiseConfig noise{cfg.sigma_n};

        const bool wants_genie =
            std::find(cfg.detectors.begin(), cfg.detectors.end(), DetectorKind::genie) !=
            cfg.detectors.end();
        double eta_g = 0.5;
        if (wants_genie) {
            SplitMix64 rng = substream(cfg.seed, {points[pi].ts_idx, points[pi].q1_idx, 0xCA11u});
            const auto cal_bits1 = random_bits(cfg.bits_per_rep, cfg.pi1, rng);
            const auto cal_bits2 = cfg.siso ? std::vector<std::uint8_t>(cfg.bits_per_rep, 0)
                                            : random_bits(cfg.bits_per_rep, cfg.pi1, rng);
            const auto cal = simulate_link(cal_bits1, cal_bits2, tx, probs, noise, rng);
            eta_g = calibrate_genie_threshold(cal);
        }

        std::vector<std::vector<double>> rep_ber(rows_per_point);
        for (int rep = 0; rep < cfg.replications; ++rep) {
            SplitMix64 rng = substream(cfg.seed, {points[pi].ts_idx, points[pi].q1_idx,
                                                  static_cast<std::uint64_t>(rep)});
            const auto bits1 = random_bits(cfg.bits_per_rep, cfg.pi1, rng);
            const auto bits2 = cfg.siso ? std::vector<std::uint8_t>(cfg.bits_per_rep, 0)
                                        : random_bits(cfg.bits_per_rep, cfg.pi1, rng);
            const auto trace = simulate_link(bits1, bits2, tx, probs, noise, rng);

            std::vector<long> errors(rows_per_point, 0);
            long genie_fallbacks = 0;
            for (const auto& o : trace) {
                for (std::size_t di = 0; di < rows_per_point; ++di) {
                    BitPair hat;
                    switch (cfg.detectors[di]) {
                        case DetectorKind::fixed:
                            hat = detect_fixed(o.y1, o.y2, Q1, cfg.eta_fixed);
                            break;
                        case DetectorKind::adaptive:
                            hat = detect_adaptive(o.y1, o.y2, Q1, tp_a);
                            break;
                        case DetectorKind::zf_ex:
                            hat = detect_zf_ex(o.y1, o.y2, hbar_ex, tp_ex);
                            break;
                        case DetectorKind::zf_in:
                            hat = detect_zf_in(o.y1, o.y2, hbar_in, tp_in);
                            break;
                        case DetectorKind::genie: {
                            bool fb = false;
                            hat = detect_genie(o.y1, o.y2, o.realized_h, eta_g, hbar_in, tp_in, &fb);
                            genie_fallbacks += fb;
                            break;
                        }
                    }
                    errors[di] += (hat.rx1 != o.x1);
                    if (!cfg.siso) errors[di] += (hat.rx2 != o.x2);
                }
            }
            const double denom = static_cast<double>(trace.size()) * (cfg.siso ? 1.0 : 2.0);
            for (std::size_t di = 0; di < rows_per_point; ++di)
                rep_ber[di].push_back(errors[di] / denom);
            (void)genie_fallbacks;
        }

        const double runtime =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        for (std::size_t di = 0; di < rows_per_point; ++di) {
            BerPoint& row = result[pi * rows_per_point + di];
            row.detector = cfg.detectors[di];
            row.Q1 = Q1;
            row.t_s = ts;
            row.runtime_s = runtime;
            double mean = 0.0;
            for (double b : rep_ber[di]) mean += b;
            mean /= rep_ber[di].size();
            double var = 0.0;
            for (double b : rep_ber[di]) var += (b - mean) * (b - mean);
            const int n = static_cast<int>(rep_ber[di].size());
            const double sem = n > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
            const double half = detail::student_t_975(n - 1) * sem;
            row.ber = mean;
            row.ci_low = std::max(0.0, mean - half);
            row.ci_high = std::min(1.0, mean + half);
        }
    };

    unsigned jobs = cfg.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.jobs;
    jobs = std::min<unsigned>(jobs, points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            run_point(i);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return result;
}

} // namespace molmimo
