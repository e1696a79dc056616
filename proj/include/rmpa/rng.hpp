#ifndef RMPA_RNG_HPP
#define RMPA_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace rmpa {

//! Deterministic random stream. mt19937_64 is fully specified by the
//! standard; the distributions below are implemented inline because the
//! std:: distribution objects are implementation-defined and would break
//! reproducibility across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    //! uniform in [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    //! uniform in [lo, hi]
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    //! standard normal via Box-Muller
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    uint64_t next_u64() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

//! splitmix64 finalizer; stable stream splitting for parallel subproblems.
inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t a, uint64_t b, uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

}  // namespace rmpa

#endif
