#pragma once

#include <cstdint>
#include <random>

namespace iontrap {

/// splitmix64 scramble; used to derive independent per-trial streams from
/// (master seed, trial index) so ensemble results do not depend on worker
/// scheduling.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// mt19937_64 with an explicit Box-Muller normal sampler. The standard
/// library's normal_distribution is implementation-defined, which would
/// break bit-identical reproducibility of stored trial records across
/// toolchains.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    double uniform() {
        // 53-bit mantissa uniform in [0,1)
        return (engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2, s;
        do {
            u1 = 2.0 * uniform() - 1.0;
            u2 = 2.0 * uniform() - 1.0;
            s = u1 * u1 + u2 * u2;
        } while (s >= 1.0 || s == 0.0);
        const double k = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = u2 * k;
        have_spare_ = true;
        return u1 * k;
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace iontrap
