#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dip {

using real = double;

// Stateless mixing step, used to derive independent sub-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 1));
}

// Deterministic RNG. mt19937_64 is fully specified by the standard; the
// distributions below are implemented by hand because std:: distribution
// implementations differ between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t raw() { return eng_(); }

    // Uniform in [0, 1).
    real uniform() {
        return static_cast<real>(raw() >> 11) * 0x1.0p-53;
    }

    real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    int uniform_int(int n) {
        return static_cast<int>(raw() % static_cast<std::uint64_t>(n));
    }

    // Standard normal via Box-Muller.
    real normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        real u1 = 1.0 - uniform(); // (0, 1]
        real u2 = uniform();
        real r = std::sqrt(-2.0 * std::log(u1));
        real a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    real normal(real sigma) { return sigma * normal(); }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    real spare_ = 0.0;
};

} // namespace dip
