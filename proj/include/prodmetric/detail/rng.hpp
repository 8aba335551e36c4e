#ifndef PRODMETRIC_DETAIL_RNG_HPP
#define PRODMETRIC_DETAIL_RNG_HPP

#include <cmath>
#include <cstdint>

namespace prodmetric::detail {

// splitmix64; each (seed, index) pair yields an independent stream, so a
// sample's draws do not depend on which thread evaluates it.
class SampleRng {
public:
    static SampleRng at(std::uint64_t seed, std::uint64_t index) {
        SampleRng r;
        r.state_ = mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ mix(index + 0xbf58476d1ce4e5b9ULL));
        return r;
    }

    SampleRng fork(std::uint64_t stream) const {
        SampleRng r;
        r.state_ = mix(state_ ^ mix(stream + 0x94d049bb133111ebULL));
        return r;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // uniform in [0,1)
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // uniform in (0,1]
    double next_unit_open_low() {
        return 1.0 - next_unit();
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // log-uniform magnitude over [lo, hi], lo > 0
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    std::uint64_t next_below(std::uint64_t n) {
        return next_u64() % n;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0;
};

}  // namespace prodmetric::detail

#endif  // PRODMETRIC_DETAIL_RNG_HPP
