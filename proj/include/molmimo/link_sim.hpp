#pragma once

// Symbol-level 2x2 BCSK link simulation.  Per slot m and receive antenna i,
//
//   y_i[m] = S_ii[0] x_i[m] + S_ij[0] x_j[m]
//          + sum_{k=1..min(m,K)} ( S_ii[k] x_i[m-k] + S_ij[k] x_j[m-k] )
//          + n_i[m],
//
// where every S is an independently drawn Binomial(Q1, A_k or B_k) count and
// n_i is Gaussian counting noise.  Bit-0 emits nothing (Q0 = 0).

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "molmimo/channel_model.hpp"
#include "molmimo/math/rng.hpp"

namespace molmimo {

struct TxConfig {
    int Q1 = 700;      // molecules per bit-1 (Q0 is fixed at 0)
    double pi1 = 0.5;  // prior of bit-1
    double t_s = 0.08; // symbol duration (s)
    int n_bits = 0;    // sequence length per antenna

    void validate() const {
        if (Q1 < 1) throw std::invalid_argument("tx: Q1 must be >= 1");
        if (!(pi1 >= 0.0 && pi1 <= 1.0)) throw std::invalid_argument("tx: pi1 in [0,1]");
        if (!(t_s > 0.0)) throw std::invalid_argument("tx: t_s must be > 0");
    }
};

struct NoiseConfig {
    double sigma_n = 10.0; // std dev of counting noise (molecules)

    void validate() const {
        if (!(sigma_n >= 0.0)) throw std::invalid_argument("noise: sigma_n must be >= 0");
    }
};

struct Mat2 {
    double m11 = 0.0, m12 = 0.0, m21 = 0.0, m22 = 0.0;

    double det() const { return m11 * m22 - m12 * m21; }

    Mat2 inverse() const {
        const double dd = det();
        if (dd == 0.0) throw std::domain_error("Mat2: singular");
        return {m22 / dd, -m12 / dd, -m21 / dd, m11 / dd};
    }

    // (v1, v2) -> M * (v1, v2)
    std::pair<double, double> apply(double v1, double v2) const {
        return {m11 * v1 + m12 * v2, m21 * v1 + m22 * v2};
    }
};

struct SlotObservation {
    int slot = 0;
    double y1 = 0.0, y2 = 0.0;  // received counts after noise
    Mat2 realized_h;            // current-slot arrival counts S_ij[0]
    std::uint8_t x1 = 0, x2 = 0;
    // Labeled interference parts per receive antenna: the current-slot
    // non-pair term (ILI) and the past-slot sum plus noise (ISI + noise).
    double ili1 = 0.0, ili2 = 0.0;
    double isi_noise1 = 0.0, isi_noise2 = 0.0;
};

// Binomial(Q, p) arrival count for one link and slot.
template <class Rng>
inline int sample_arrivals(int Q, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_arrivals: p in [0,1]");
    if (p == 0.0) return 0;
    if (p == 1.0) return Q;
    std::binomial_distribution<int> bin(Q, p);
    return bin(rng);
}

template <class Rng>
inline std::vector<SlotObservation> simulate_link(const std::vector<std::uint8_t>& bits1,
                                                  const std::vector<std::uint8_t>& bits2,
                                                  const TxConfig& tx, const SlotProbabilities& probs,
                                                  const NoiseConfig& noise, Rng& rng) {
    tx.validate();
    noise.validate();
    if (bits1.size() != bits2.size())
        throw std::invalid_argument("simulate_link: bit sequences differ in length");
    const int n = static_cast<int>(bits1.size());
    const int K = probs.K;

    std::normal_distribution<double> gauss(0.0, noise.sigma_n);
    std::vector<SlotObservation> out(n);
    for (int m = 0; m < n; ++m) {
        SlotObservation& o = out[m];
        o.slot = m;
        o.x1 = bits1[m];
        o.x2 = bits2[m];

        // Current-slot channel realization, sampled every slot so the genie
        // detector sees the full matrix regardless of the transmitted bits.
        o.realized_h.m11 = sample_arrivals(tx.Q1, probs.A[0], rng);
        o.realized_h.m12 = sample_arrivals(tx.Q1, probs.B[0], rng);
        o.realized_h.m21 = sample_arrivals(tx.Q1, probs.B[0], rng);
        o.realized_h.m22 = sample_arrivals(tx.Q1, probs.A[0], rng);

        const double desired1 = o.realized_h.m11 * bits1[m];
        const double desired2 = o.realized_h.m22 * bits2[m];
        o.ili1 = o.realized_h.m12 * bits2[m];
        o.ili2 = o.realized_h.m21 * bits1[m];

        double isi1 = 0.0, isi2 = 0.0;
        const int kmax = std::min(m, K);
        for (int k = 1; k <= kmax; ++k) {
            if (bits1[m - k]) {
                isi1 += sample_arrivals(tx.Q1, probs.A[k], rng);
                isi2 += sample_arrivals(tx.Q1, probs.B[k], rng);
            }
            if (bits2[m - k]) {
                isi1 += sample_arrivals(tx.Q1, probs.B[k], rng);
                isi2 += sample_arrivals(tx.Q1, probs.A[k], rng);
            }
        }
        o.isi_noise1 = isi1 + (noise.sigma_n > 0.0 ? gauss(rng) : 0.0);
        o.isi_noise2 = isi2 + (noise.sigma_n > 0.0 ? gauss(rng) : 0.0);

        o.y1 = desired1 + o.ili1 + o.isi_noise1;
        o.y2 = desired2 + o.ili2 + o.isi_noise2;
    }
    return out;
}

// Random bit sequences with P(bit = 1) = pi1.
template <class Rng>
inline std::vector<std::uint8_t> random_bits(int n, double pi1, Rng& rng) {
    std::vector<std::uint8_t> bits(n);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto& b : bits) b = uni(rng) < pi1 ? 1 : 0;
    return bits;
}

// Mean channel matrices: H_ex excludes the cross links from the matrix
// (they stay in the interference vector), H_in includes them.
inline std::pair<Mat2, Mat2> mean_channel_matrices(const SlotProbabilities& probs, int Q1) {
    if (!(probs.A.at(0) > 0.0)) throw std::invalid_argument("mean_channel_matrices: A0 must be > 0");
    const double a = Q1 * probs.A[0];
    const double b = Q1 * probs.B[0];
    return {Mat2{a, 0.0, 0.0, a}, Mat2{a, b, b, a}};
}

} // namespace molmimo
