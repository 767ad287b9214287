#pragma once

// Software emulation of the testbed messaging pipeline: ITA2 (letters mode)
// text encoding, front/back stream splitting, BCSK framing with start slots
// and an aligned 00000/00000 terminator, an end-to-end demo through the link
// simulator, and the signal-to-ILI probe ratio.

#include <array>
#include <cctype>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "molmimo/detection.hpp"

namespace molmimo {

// ITA2 letters mode, bits written first-transmitted-first ('A' = 11000).
// Only the 26 letters are supported; 00000 is reserved for the terminator
// and stream padding.
class Ita2Codebook {
  public:
    static constexpr int code_bits = 5;

    static std::uint8_t encode(char letter) {
        const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
        if (u < 'A' || u > 'Z') throw std::invalid_argument("ita2: unsupported character");
        return kLetterToCode[u - 'A'];
    }

    // Returns nullopt for codes outside the letters table (including 00000).
    static std::optional<char> decode(std::uint8_t code) {
        if (code >= 32) return std::nullopt;
        const char c = kCodeToLetter[code];
        return c == 0 ? std::nullopt : std::optional<char>(c);
    }

  private:
    static constexpr std::array<std::uint8_t, 26> kLetterToCode = {
        0b11000, 0b10011, 0b01110, 0b10010, 0b10000, 0b10110, 0b01011, 0b00101, 0b01100,
        0b11010, 0b11110, 0b01001, 0b00111, 0b00110, 0b00011, 0b01101, 0b11101, 0b01010,
        0b10100, 0b00001, 0b11100, 0b01111, 0b11001, 0b10111, 0b10101, 0b10001};

    static constexpr std::array<char, 32> make_reverse() {
        std::array<char, 32> rev{};
        for (int i = 0; i < 26; ++i) rev[kLetterToCode[i]] = static_cast<char>('A' + i);
        return rev;
    }
    static constexpr std::array<char, 32> kCodeToLetter = make_reverse();
};

using BitStream = std::vector<std::uint8_t>;

// A frame is `start_slots` slots of bit-1 on both streams, the two payload
// streams (padded to equal group count with 00000 on the shorter one), and
// the aligned 00000/00000 terminator.
struct Frame {
    int start_slots = 2;
    BitStream payload1;
    BitStream payload2;

    int slot_count() const {
        return start_slots + static_cast<int>(payload1.size()) + Ita2Codebook::code_bits;
    }

    // Full on-air bit streams including start and terminator.
    std::pair<BitStream, BitStream> transmit_streams() const {
        BitStream s1, s2;
        s1.reserve(slot_count());
        s2.reserve(slot_count());
        for (int i = 0; i < start_slots; ++i) {
            s1.push_back(1);
            s2.push_back(1);
        }
        s1.insert(s1.end(), payload1.begin(), payload1.end());
        s2.insert(s2.end(), payload2.begin(), payload2.end());
        for (int i = 0; i < Ita2Codebook::code_bits; ++i) {
            s1.push_back(0);
            s2.push_back(0);
        }
        return {std::move(s1), std::move(s2)};
    }
};

namespace detail {

inline void append_code(BitStream& s, std::uint8_t code) {
    for (int b = Ita2Codebook::code_bits - 1; b >= 0; --b)
        s.push_back(static_cast<std::uint8_t>((code >> b) & 1u));
}

inline std::uint8_t read_code(const BitStream& s, std::size_t group) {
    std::uint8_t code = 0;
    for (int b = 0; b < Ita2Codebook::code_bits; ++b)
        code = static_cast<std::uint8_t>((code << 1) | s[group * Ita2Codebook::code_bits + b]);
    return code;
}

} // namespace detail

// ITA2-encodes the text and splits it front-half/back-half: the first
// ceil(n/2) letters go to stream 1, the rest to stream 2.  For odd n the
// final stream-2 group is 00000 padding (aligned with a letter on stream 1,
// so it cannot be mistaken for the terminator).
inline Frame encode_message(const std::string& text, int start_slots = 2) {
    if (start_slots < 1) throw std::invalid_argument("encode_message: start_slots >= 1");
    std::vector<std::uint8_t> codes;
    codes.reserve(text.size());
    for (char c : text) codes.push_back(Ita2Codebook::encode(c));

    const std::size_t n = codes.size();
    const std::size_t front = (n + 1) / 2;
    Frame f;
    f.start_slots = start_slots;
    for (std::size_t i = 0; i < front; ++i) detail::append_code(f.payload1, codes[i]);
    for (std::size_t i = front; i < n; ++i) detail::append_code(f.payload2, codes[i]);
    while (f.payload2.size() < f.payload1.size()) f.payload2.push_back(0);

    // Letters never encode to 00000, so an aligned all-zero group pair in the
    // payload is impossible; reject defensively rather than emit a frame the
    // decoder would cut short.
    const std::size_t groups = f.payload1.size() / Ita2Codebook::code_bits;
    for (std::size_t g = 0; g < groups; ++g)
        if (detail::read_code(f.payload1, g) == 0 && detail::read_code(f.payload2, g) == 0)
            throw std::invalid_argument("encode_message: payload collides with terminator");
    return f;
}

struct DecodeResult {
    bool ok = false;
    std::string text;
    std::string error;
};

// Strips the start slots, consumes aligned 5-bit groups until the 00000/00000
// terminator, ITA2-decodes each non-padding group, and rejoins the halves.
// Malformed input yields an error result, never an exception.
inline DecodeResult decode_frame(const BitStream& bits1, const BitStream& bits2,
                                 int start_slots = 2) {
    DecodeResult res;
    if (bits1.size() != bits2.size()) {
        res.error = "stream lengths differ";
        return res;
    }
    if (static_cast<int>(bits1.size()) < start_slots) {
        res.error = "missing start signal";
        return res;
    }
    for (int i = 0; i < start_slots; ++i) {
        if (!bits1[i] || !bits2[i]) {
            res.error = "missing start signal";
            return res;
        }
    }

    const std::size_t payload_bits = bits1.size() - start_slots;
    const std::size_t groups = payload_bits / Ita2Codebook::code_bits;
    BitStream p1(bits1.begin() + start_slots, bits1.end());
    BitStream p2(bits2.begin() + start_slots, bits2.end());

    std::string half1, half2;
    for (std::size_t g = 0; g < groups; ++g) {
        const std::uint8_t c1 = detail::read_code(p1, g);
        const std::uint8_t c2 = detail::read_code(p2, g);
        if (c1 == 0 && c2 == 0) {
            res.ok = true;
            res.text = half1 + half2;
            return res;
        }
        if (c1 != 0) {
            const auto l = Ita2Codebook::decode(c1);
            if (!l) {
                res.error = "group outside the letters codebook";
                return res;
            }
            half1.push_back(*l);
        }
        if (c2 != 0) {
            const auto l = Ita2Codebook::decode(c2);
            if (!l) {
                res.error = "group outside the letters codebook";
                return res;
            }
            half2.push_back(*l);
        }
    }
    res.error = "missing terminator";
    return res;
}

// Slot budget of a framed message: start + ceil(5n / streams) + terminator.
inline int frame_slot_count(int n_letters, int streams, int start_slots = 2) {
    const int groups_per_stream = (n_letters + streams - 1) / streams;
    return start_slots + Ita2Codebook::code_bits * groups_per_stream + Ita2Codebook::code_bits;
}

struct DemoResult {
    bool decoded_ok = false;
    std::string decoded_text;
    std::string decode_error;
    long bit_errors = 0;
    long total_bits = 0;
    int slots = 0;
    std::vector<BitPair> decisions;
};

// encode -> simulate -> detect -> decode.  Detection uses the adaptive
// thresholding detector with MAP thresholds derived from the slot
// probabilities (bit priors taken as 1/2 for the threshold math).
inline DemoResult end_to_end_demo(const std::string& text, const SlotProbabilities& probs, int Q1,
                                  double sigma_n, std::uint64_t seed, int start_slots = 2) {
    const Frame frame = encode_message(text, start_slots);
    auto [tx1_bits, tx2_bits] = frame.transmit_streams();

    TxConfig tx;
    tx.Q1 = Q1;
    tx.pi1 = 0.5;
    tx.t_s = probs.t_s;
    tx.n_bits = static_cast<int>(tx1_bits.size());
    NoiseConfig noise{sigma_n};
    SplitMix64 rng = substream(seed, {0xDE30u});
    const auto trace = simulate_link(tx1_bits, tx2_bits, tx, probs, noise, rng);

    const ThresholdPair tp_a =
        scale_thresholds(threshold_pair(detector_stats_ex(probs, Q1, 0.5, sigma_n)), probs.A.at(0));

    BitStream rx1_bits, rx2_bits;
    DemoResult res;
    res.slots = frame.slot_count();
    for (const auto& o : trace) {
        const BitPair hat = detect_adaptive(o.y1, o.y2, Q1, tp_a);
        res.decisions.push_back(hat);
        rx1_bits.push_back(hat.rx1);
        rx2_bits.push_back(hat.rx2);
        res.bit_errors += (hat.rx1 != o.x1) + (hat.rx2 != o.x2);
        res.total_bits += 2;
    }

    const DecodeResult dec = decode_frame(rx1_bits, rx2_bits, start_slots);
    res.decoded_ok = dec.ok;
    res.decoded_text = dec.text;
    res.decode_error = dec.error;
    return res;
}

// Signal-to-ILI probe: Tx1 sends bit-1, Tx2 stays silent, no symbol history.
// Returns the ratio of summed receptions at Rx1 and Rx2 over n_probes fresh
// slots (expected value A0/B0); a non-positive denominator reports the
// infinity sentinel (the B0 -> 0 limit).
inline double s_ili_ratio(const SlotProbabilities& probs, int Q1, double sigma_n, int n_probes,
                          std::uint64_t seed) {
    if (n_probes < 1) throw std::invalid_argument("s_ili_ratio: n_probes >= 1");
    SplitMix64 rng = substream(seed, {0x511Bu});
    std::normal_distribution<double> gauss(0.0, sigma_n);
    double sum1 = 0.0, sum2 = 0.0;
    for (int i = 0; i < n_probes; ++i) {
        sum1 += sample_arrivals(Q1, probs.A.at(0), rng) + (sigma_n > 0.0 ? gauss(rng) : 0.0);
        sum2 += sample_arrivals(Q1, probs.B.at(0), rng) + (sigma_n > 0.0 ? gauss(rng) : 0.0);
    }
    if (!(sum2 > 0.0)) return std::numeric_limits<double>::infinity();
    return sum1 / sum2;
}

} // namespace molmimo
