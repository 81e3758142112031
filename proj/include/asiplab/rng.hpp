#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace asiplab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11 constants).
// A stream is addressed by (seed, stream_id); draws are a pure function of
// the counter, so replicas can be laid out deterministically and replayed.
class Philox {
  public:
    Philox(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t k = splitmix(seed ^ splitmix(stream_id + 0x9E3779B97F4A7C15ull));
        key0_ = static_cast<std::uint32_t>(k);
        key1_ = static_cast<std::uint32_t>(k >> 32);
        counter_ = {0, 0, 0, 0};
        have_ = 0;
    }

    std::uint32_t next_u32() {
        if (have_ == 0) {
            block();
            have_ = 4;
        }
        return out_[--have_];
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

  private:
    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
        std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    void block() {
        std::uint32_t c0 = counter_[0], c1 = counter_[1], c2 = counter_[2], c3 = counter_[3];
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(0xD2511F53u, c0, hi0, lo0);
            mulhilo(0xCD9E8D57u, c2, hi1, lo1);
            std::uint32_t n0 = hi1 ^ c1 ^ k0;
            std::uint32_t n1 = lo1;
            std::uint32_t n2 = hi0 ^ c3 ^ k1;
            std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        out_ = {c0, c1, c2, c3};
        if (++counter_[0] == 0)
            if (++counter_[1] == 0)
                if (++counter_[2] == 0) ++counter_[3];
    }

    std::uint32_t key0_, key1_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> out_;
    int have_ = 0;
};

// Sampling front-end: uniforms from the counter stream, normals via a
// 128-layer ziggurat (Marsaglia & Tsang) with the classic tail fallback.
class RandomStream {
  public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0) : gen_(seed, stream_id) {}

    double uniform() {  // [0,1)
        return static_cast<double>(gen_.next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform_pos() {  // (0,1)
        double u;
        do { u = uniform(); } while (u <= 0.0);
        return u;
    }

    std::uint64_t bits() { return gen_.next_u64(); }

    double normal() {
        const Tables& t = tables();
        for (;;) {
            std::int32_t hz = static_cast<std::int32_t>(gen_.next_u32());
            std::uint32_t iz = static_cast<std::uint32_t>(hz) & 127u;
            std::uint32_t az = hz < 0 ? static_cast<std::uint32_t>(-static_cast<std::int64_t>(hz))
                                      : static_cast<std::uint32_t>(hz);
            if (az < t.kn[iz]) return hz * t.wn[iz];
            if (iz == 0) {
                // Tail beyond R: exponential rejection.
                double x, y;
                do {
                    x = -std::log(uniform_pos()) / kR;
                    y = -std::log(uniform_pos());
                } while (y + y < x * x);
                return hz > 0 ? kR + x : -(kR + x);
            }
            double x = hz * t.wn[iz];
            if (t.fn[iz] + uniform() * (t.fn[iz - 1] - t.fn[iz]) < std::exp(-0.5 * x * x))
                return x;
        }
    }

  private:
    static constexpr double kR = 3.442619855899;

    struct Tables {
        std::array<std::uint32_t, 128> kn{};
        std::array<double, 128> wn{};
        std::array<double, 128> fn{};
        Tables() {
            const double m1 = 2147483648.0;
            const double vn = 9.91256303526217e-3;
            double dn = kR, tn = kR;
            double q = vn / std::exp(-0.5 * dn * dn);
            kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
            kn[1] = 0;
            wn[0] = q / m1;
            wn[127] = dn / m1;
            fn[0] = 1.0;
            fn[127] = std::exp(-0.5 * dn * dn);
            for (int i = 126; i >= 1; --i) {
                dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
                kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
                tn = dn;
                fn[i] = std::exp(-0.5 * dn * dn);
                wn[i] = dn / m1;
            }
        }
    };

    static const Tables& tables() {
        static const Tables t;
        return t;
    }

    Philox gen_;
};

// Per-replica stream derivation: hash(master seed, replica index).
inline RandomStream replica_stream(std::uint64_t master_seed, std::uint64_t replica) {
    return RandomStream(master_seed, replica);
}

}  // namespace asiplab
