#pragma once

// The five detectors and their statistics.
//
// Interference statistics (per receive antenna, by symmetry Rx1 suffices):
//   mu_I     = pi1 Q1 sum_{k>=1} (A_k + B_k)
//   sigma_I^2= pi0 pi1 Q1^2 sum (A_k^2 + B_k^2)
//            + pi1 Q1 sum (A_k(1-A_k) + B_k(1-B_k)) + sigma_n^2
// Conditional detector-output moments follow for the mean-matrix inverses
// excluding and including the cross links; the MAP threshold pair solves the
// two-Gaussian density equality in closed form.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "molmimo/link_sim.hpp"

namespace molmimo {

struct BitPair {
    std::uint8_t rx1 = 0;
    std::uint8_t rx2 = 0;

    bool operator==(const BitPair&) const = default;
};

// Mean/variance of one term S[k]*x[m-k]: x is Bernoulli(pi1) and S is an
// independent Binomial(Q1, p) count.
inline std::pair<double, double> lemma1_stats(double Q1, double p, double pi1) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("lemma1_stats: p in [0,1]");
    if (!(pi1 >= 0.0 && pi1 <= 1.0)) throw std::invalid_argument("lemma1_stats: pi1 in [0,1]");
    const double pi0 = 1.0 - pi1;
    const double mean = pi1 * Q1 * p;
    const double var = pi1 * Q1 * p * (1.0 - p) + pi0 * pi1 * Q1 * Q1 * p * p;
    return {mean, var};
}

struct InterferenceStats {
    double mu_I = 0.0;
    double sigma2_I = 0.0;
    std::vector<double> mean_per_k; // k = 1..n_terms, pair+cross combined
    std::vector<double> var_per_k;
    // Current-slot cross-link (ILI) term, kept separate from the ISI sums.
    double ili_mean = 0.0;
    double ili_var = 0.0;
};

// Steady-state interference statistics with n_terms ISI slots (pass the slot
// index m for early slots; n_terms < 0 uses the full memory K).
inline InterferenceStats interference_stats(const SlotProbabilities& probs, double Q1, double pi1,
                                            double sigma_n, int n_terms = -1) {
    if (n_terms < 0 || n_terms > probs.K) n_terms = probs.K;
    InterferenceStats st;
    st.sigma2_I = sigma_n * sigma_n;
    for (int k = 1; k <= n_terms; ++k) {
        const auto [ma, va] = lemma1_stats(Q1, probs.A[k], pi1);
        const auto [mb, vb] = lemma1_stats(Q1, probs.B[k], pi1);
        st.mean_per_k.push_back(ma + mb);
        st.var_per_k.push_back(va + vb);
        st.mu_I += ma + mb;
        st.sigma2_I += va + vb;
    }
    const auto [mi, vi] = lemma1_stats(Q1, probs.B[0], pi1);
    st.ili_mean = mi;
    st.ili_var = vi;
    return st;
}

enum class DetectorKind { fixed, adaptive, zf_ex, zf_in, genie };

inline const char* to_string(DetectorKind k) {
    switch (k) {
        case DetectorKind::fixed: return "fixed";
        case DetectorKind::adaptive: return "adaptive";
        case DetectorKind::zf_ex: return "zf_ex";
        case DetectorKind::zf_in: return "zf_in";
        case DetectorKind::genie: return "genie";
    }
    return "?";
}

struct DetectorStats {
    double mu0 = 0.0, mu1 = 0.0;
    double sigma0_sq = 0.0, sigma1_sq = 0.0;
    DetectorKind kind = DetectorKind::zf_ex;

    double beta_ratio() const { return sigma1_sq / sigma0_sq; }
};

// Conditional output stats of practical ZF with the diagonal mean matrix.
inline DetectorStats detector_stats_ex(const SlotProbabilities& probs, double Q1, double pi1,
                                       double sigma_n) {
    const double A0 = probs.A.at(0), B0 = probs.B.at(0);
    if (!(A0 > 0.0)) throw std::invalid_argument("detector_stats_ex: A0 must be > 0");
    const double pi0 = 1.0 - pi1;
    const InterferenceStats I = interference_stats(probs, Q1, pi1, sigma_n);
    DetectorStats st;
    st.kind = DetectorKind::zf_ex;
    st.mu0 = pi1 * B0 / A0 + I.mu_I / (Q1 * A0);
    st.mu1 = 1.0 + st.mu0;
    st.sigma0_sq = pi1 * B0 * (1.0 - B0) / (A0 * A0 * Q1) + pi0 * pi1 * B0 * B0 / (A0 * A0) +
                   I.sigma2_I / (Q1 * Q1 * A0 * A0);
    st.sigma1_sq = (1.0 - A0) / (Q1 * A0) + st.sigma0_sq;
    return st;
}

// Conditional output stats of practical ZF with the full mean matrix.
inline DetectorStats detector_stats_in(const SlotProbabilities& probs, double Q1, double pi1,
                                       double sigma_n) {
    const double A0 = probs.A.at(0), B0 = probs.B.at(0);
    if (!(A0 * A0 > B0 * B0))
        throw std::invalid_argument("detector_stats_in: rank deficiency, need A0^2 > B0^2");
    const double den = A0 * A0 - B0 * B0;
    const InterferenceStats I = interference_stats(probs, Q1, pi1, sigma_n);
    DetectorStats st;
    st.kind = DetectorKind::zf_in;
    st.mu0 = (A0 - B0) * I.mu_I / (Q1 * den);
    st.mu1 = 1.0 + st.mu0;
    st.sigma0_sq = (A0 / den) * (A0 / den) * pi1 * B0 * (1.0 - B0) / Q1 +
                   (B0 / den) * (B0 / den) * pi1 * A0 * (1.0 - A0) / Q1 +
                   (A0 * A0 + B0 * B0) / (Q1 * Q1 * den * den) * I.sigma2_I;
    st.sigma1_sq = (A0 * A0 * A0 * (1.0 - A0) + B0 * B0 * B0 * (1.0 - B0)) / (Q1 * den * den) +
                   st.sigma0_sq;
    return st;
}

struct ThresholdPair {
    double eta_minus = -std::numeric_limits<double>::infinity();
    double eta_plus = 0.0;

    // bit-0 iff eta_minus < y < eta_plus; boundaries decide bit-1.
    bool decide(double y) const { return !(y < eta_plus && y > eta_minus); }
};

// MAP threshold pair from the conditional Gaussian pair.  With
// beta = (sigma1/sigma0)^2 > 1 the density equality has the two roots
//   eta = mu0 + (-1 +- sqrt(1 + (beta-1)(1 + sigma0^2 beta ln beta))) / (beta-1);
// beta == 1 degenerates to the single midpoint threshold.
inline ThresholdPair threshold_pair(const DetectorStats& st) {
    const double beta = st.beta_ratio();
    if (beta < 1.0) throw std::invalid_argument("threshold_pair: need sigma1 >= sigma0");
    ThresholdPair tp;
    if (beta == 1.0) {
        tp.eta_plus = 0.5 * (st.mu0 + st.mu1);
        return tp;
    }
    const double root = std::sqrt(1.0 + (beta - 1.0) * (1.0 + st.sigma0_sq * beta * std::log(beta)));
    tp.eta_plus = st.mu0 + (-1.0 + root) / (beta - 1.0);
    tp.eta_minus = st.mu0 + (-1.0 - root) / (beta - 1.0);
    return tp;
}

inline ThresholdPair scale_thresholds(const ThresholdPair& tp, double factor) {
    ThresholdPair out;
    out.eta_plus = tp.eta_plus * factor;
    out.eta_minus = std::isinf(tp.eta_minus) ? tp.eta_minus : tp.eta_minus * factor;
    return out;
}

// Fixed empirical threshold on y/Q1 (default eta_f = 0.2).
inline BitPair detect_fixed(double y1, double y2, int Q1, double eta_f = 0.2) {
    if (!(eta_f > 0.0 && eta_f < 1.0)) throw std::invalid_argument("detect_fixed: eta_f in (0,1)");
    return {static_cast<std::uint8_t>(y1 / Q1 >= eta_f), static_cast<std::uint8_t>(y2 / Q1 >= eta_f)};
}

// Adaptive thresholding: y_hat = y/Q1 against thresholds scaled by A0.
inline BitPair detect_adaptive(double y1, double y2, int Q1, const ThresholdPair& scaled) {
    return {static_cast<std::uint8_t>(scaled.decide(y1 / Q1)),
            static_cast<std::uint8_t>(scaled.decide(y2 / Q1))};
}

inline BitPair detect_zf_ex(double y1, double y2, const Mat2& hbar_ex, const ThresholdPair& tp) {
    if (hbar_ex.det() == 0.0) throw std::domain_error("detect_zf_ex: singular mean matrix");
    const auto [v1, v2] = hbar_ex.inverse().apply(y1, y2);
    return {static_cast<std::uint8_t>(tp.decide(v1)), static_cast<std::uint8_t>(tp.decide(v2))};
}

// Closed-form inverse of the full mean matrix:
//   Hbar_in^-1 = 1/(Q1 (A0^2 - B0^2)) [A0 -B0; -B0 A0].
inline Mat2 hbar_in_inverse(const SlotProbabilities& probs, int Q1) {
    const double A0 = probs.A.at(0), B0 = probs.B.at(0);
    const double den = Q1 * (A0 * A0 - B0 * B0);
    if (!(A0 * A0 > B0 * B0)) throw std::domain_error("hbar_in_inverse: rank deficiency");
    return {A0 / den, -B0 / den, -B0 / den, A0 / den};
}

inline BitPair detect_zf_in(double y1, double y2, const Mat2& hbar_in, const ThresholdPair& tp) {
    const auto [v1, v2] = hbar_in.inverse().apply(y1, y2);
    return {static_cast<std::uint8_t>(tp.decide(v1)), static_cast<std::uint8_t>(tp.decide(v2))};
}

// Genie-aided ZF inverts the realized current-slot matrix and compares with
// an empirically calibrated single threshold; singular slots fall back to
// practical ZF with the mean matrix (counted by the caller via the flag).
inline BitPair detect_genie(double y1, double y2, const Mat2& realized_h, double eta_g,
                            const Mat2& hbar_in_fallback, const ThresholdPair& tp_fallback,
                            bool* used_fallback = nullptr) {
    if (realized_h.det() == 0.0) {
        if (used_fallback) *used_fallback = true;
        return detect_zf_in(y1, y2, hbar_in_fallback, tp_fallback);
    }
    if (used_fallback) *used_fallback = false;
    const auto [v1, v2] = realized_h.inverse().apply(y1, y2);
    return {static_cast<std::uint8_t>(v1 >= eta_g), static_cast<std::uint8_t>(v2 >= eta_g)};
}

// Brute-force calibration of the genie threshold on a held-out trace:
// scans [-0.5, 1.5] at 1e-3 and returns the midpoint of the plateau of
// minimum-error thresholds.
inline double calibrate_genie_threshold(std::span<const SlotObservation> trace) {
    std::vector<double> outputs;
    std::vector<std::uint8_t> bits;
    outputs.reserve(2 * trace.size());
    for (const auto& o : trace) {
        if (o.realized_h.det() == 0.0) continue;
        const auto [v1, v2] = o.realized_h.inverse().apply(o.y1, o.y2);
        outputs.push_back(v1);
        bits.push_back(o.x1);
        outputs.push_back(v2);
        bits.push_back(o.x2);
    }
    if (outputs.empty()) throw std::invalid_argument("calibrate_genie_threshold: empty trace");

    long best_errors = std::numeric_limits<long>::max();
    long lo = 0, hi = 0;
    for (long step = -500; step <= 1500; ++step) {
        const double eta = step * 1e-3;
        long errors = 0;
        for (std::size_t i = 0; i < outputs.size(); ++i)
            errors += (outputs[i] >= eta) != (bits[i] != 0);
        if (errors < best_errors) {
            best_errors = errors;
            lo = hi = step;
        } else if (errors == best_errors) {
            hi = step;
        }
    }
    return 0.5 * (lo + hi) * 1e-3;
}

} // namespace molmimo
