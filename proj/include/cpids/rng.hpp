#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace cpids {

// Deterministic xoshiro256** generator. All stochastic steps (folds, bootstrap,
// resampling, weight init, the synthetic generator) draw from this so a fixed
// seed gives bit-identical runs independent of platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) {
        // splitmix64 seeding
        std::uint64_t z = seed;
        for (auto& s : state_) {
            z += 0x9e3779b97f4a7c15ULL;
            std::uint64_t x = z;
            x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
            x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
            s = x ^ (x >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform in [0, n), unbiased via rejection
    std::size_t next_index(std::size_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return static_cast<std::size_t>(v % n);
    }

    // uniform in [0, 1)
    double next_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in (0, 1)
    double next_open_real() {
        double u = next_real();
        while (u == 0.0) u = next_real();
        return u;
    }

    // standard normal via Box-Muller
    double next_gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_open_real();
        const double u2 = next_real();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = next_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // independent stream for a labelled work unit
    Rng fork(std::uint64_t salt) const {
        Rng r(0);
        r.state_ = state_;
        r.state_[0] ^= 0x9e3779b97f4a7c15ULL * (salt + 1);
        r.state_[2] ^= 0xbf58476d1ce4e5b9ULL * (salt + 1);
        r.next_u64();
        r.next_u64();
        return r;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_ = {};
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace cpids
