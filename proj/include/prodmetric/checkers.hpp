#ifndef PRODMETRIC_CHECKERS_HPP
#define PRODMETRIC_CHECKERS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "prodmetric/core.hpp"
#include "prodmetric/detail/format.hpp"
#include "prodmetric/detail/parallel.hpp"
#include "prodmetric/detail/rng.hpp"
#include "prodmetric/errors.hpp"

namespace prodmetric {

struct SearchConfig {
    std::uint64_t seed = 0;
    std::size_t samples = 100000;
    double range_low = 1e-6;
    double range_high = 1e6;
    // Counterexamples in this problem family live on or near boundaries,
    // hence the high boundary share.
    double boundary_fraction = 0.5;
    double zero_fraction = 0.05;
    unsigned threads = 1;
    double divergence_ceiling = 1e6;

    void validate() const {
        if (samples < 1) throw DomainError("samples must be at least 1");
        if (!(range_low > 0.0) || !(range_high >= range_low))
            throw DomainError("sampling range must satisfy 0 < range_low <= range_high");
        if (boundary_fraction < 0.0 || boundary_fraction > 1.0 || zero_fraction < 0.0 ||
            zero_fraction > 1.0 || boundary_fraction + zero_fraction > 1.0)
            throw DomainError("sampling fractions must lie in [0,1] and sum to at most 1");
        if (threads < 1) throw DomainError("threads must be at least 1");
    }
};

enum class VerdictStatus { Proved, Refuted, NoViolationFound };

inline std::string to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::Proved: return "Proved";
        case VerdictStatus::Refuted: return "Refuted";
        case VerdictStatus::NoViolationFound: return "NoViolationFound";
    }
    return {};
}

struct SearchStats {
    std::size_t samples_used = 0;
    std::uint64_t seed = 0;
};

struct Verdict {
    VerdictStatus status = VerdictStatus::NoViolationFound;
    std::string detail;
    std::optional<std::vector<double>> witness_point;
    std::optional<std::pair<std::vector<double>, std::vector<double>>> witness_pair;
    std::optional<TripletND> witness_triplet;
    std::optional<std::pair<double, double>> witness_ab;
    SearchStats stats;

    static Verdict proved(std::string detail) {
        return {VerdictStatus::Proved, std::move(detail), {}, {}, {}, {}, {}};
    }
    static Verdict none(SearchStats stats, std::string detail = "no violation found") {
        return {VerdictStatus::NoViolationFound, std::move(detail), {}, {}, {}, {}, stats};
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"status", to_string(status)}, {"detail", detail}};
        if (witness_point) j["witness_point"] = *witness_point;
        if (witness_pair) j["witness_pair"] = {{"a", witness_pair->first}, {"b", witness_pair->second}};
        if (witness_triplet)
            j["witness_triplet"] = {{"a", witness_triplet->a},
                                    {"b", witness_triplet->b},
                                    {"c", witness_triplet->c}};
        if (witness_ab) j["witness_ab"] = {witness_ab->first, witness_ab->second};
        j["samples_used"] = stats.samples_used;
        j["seed"] = stats.seed;
        return j;
    }
};

namespace detail_checks {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Deterministic probe points tried before any random sampling. The canonical
// small-integer boundary pairs realize the textbook counterexamples, so
// refutations come with recognizable witnesses.
inline const std::vector<std::pair<double, double>>& probe_pairs() {
    static const std::vector<std::pair<double, double>> pairs{
        {1.0, 2.0}, {2.0, 1.0}, {1.0, 1.0}, {1.0, 3.0}, {3.0, 1.0},
        {2.0, 3.0}, {0.5, 0.5}, {1e-3, 1.0}, {1.0, 1e-3}, {10.0, 20.0}};
    return pairs;
}

inline std::vector<double> axis_point(std::size_t n, std::size_t j, double mag) {
    std::vector<double> v(n, 0.0);
    v[j] = mag;
    return v;
}

inline std::vector<double> constant_point(std::size_t n, double mag) {
    return std::vector<double>(n, mag);
}

}  // namespace detail_checks

/// Amenability: F(x) = 0 exactly when x = 0. The origin is checked exactly,
/// then axis points (the classic geometric-mean failure mode), then random
/// nonzero points.
inline Verdict check_amenable(const Combiner& f, const SearchConfig& cfg) {
    cfg.validate();
    const std::size_t n = f.arity();

    std::vector<std::vector<double>> probes;
    probes.push_back(detail_checks::constant_point(n, 0.0));
    for (double mag : {1.0, 0.5, 2.0, 1e-3, 1e3})
        for (std::size_t j = 0; j < n; ++j) probes.push_back(detail_checks::axis_point(n, j, mag));
    probes.push_back(detail_checks::constant_point(n, 1.0));

    const std::size_t total = probes.size() + cfg.samples;
    auto point_at = [&](std::size_t i) -> std::vector<double> {
        if (i < probes.size()) return probes[i];
        auto rng = detail::SampleRng::at(cfg.seed, i);
        std::vector<double> x(n, 0.0);
        // keep at least one coordinate nonzero
        std::size_t keep = static_cast<std::size_t>(rng.next_below(n));
        for (std::size_t j = 0; j < n; ++j) {
            if (j != keep && rng.next_unit() < 0.5) continue;  // sparse points included
            x[j] = rng.log_uniform(cfg.range_low, cfg.range_high);
        }
        return x;
    };
    auto is_zero_vec = [](const std::vector<double>& x) {
        return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
    };
    auto hit = [&](std::size_t i) {
        std::vector<double> x = point_at(i);
        try {
            double v = f(x);
            if (is_zero_vec(x)) return v != 0.0;
            return v == 0.0;
        } catch (const EvaluationError&) {
            return false;  // out-of-range point, not evidence either way
        }
    };
    auto found = detail::first_index(total, cfg.threads, hit);
    if (found) {
        std::vector<double> x = point_at(*found);
        Verdict v;
        v.status = VerdictStatus::Refuted;
        v.witness_point = x;
        v.stats = {*found + 1, cfg.seed};
        v.detail = is_zero_vec(x)
                       ? "F(0,...,0) = " + detail::fmt_double(f(x)) + " != 0"
                       : "F vanishes at a nonzero point";
        return v;
    }
    return Verdict::none({total, cfg.seed});
}

/// Monotonicity with respect to the coordinatewise partial order.
inline Verdict check_monotone(const Combiner& f, const SearchConfig& cfg) {
    cfg.validate();
    const std::size_t n = f.arity();
    using Pair = std::pair<std::vector<double>, std::vector<double>>;

    std::vector<Pair> probes;
    probes.emplace_back(detail_checks::constant_point(n, 1.0), detail_checks::constant_point(n, 2.0));
    probes.emplace_back(detail_checks::constant_point(n, 0.0), detail_checks::constant_point(n, 1.0));
    for (std::size_t j = 0; j < n; ++j) {
        probes.emplace_back(detail_checks::axis_point(n, j, 1.0), detail_checks::axis_point(n, j, 2.0));
        auto hi = detail_checks::constant_point(n, 1.0);
        hi[j] = 2.0;
        probes.emplace_back(detail_checks::constant_point(n, 1.0), hi);
        auto lo = detail_checks::constant_point(n, 1.0);
        lo[j] = 0.0;
        probes.emplace_back(lo, detail_checks::constant_point(n, 1.0));
    }

    const std::size_t total = probes.size() + cfg.samples;
    auto pair_at = [&](std::size_t i) -> Pair {
        if (i < probes.size()) return probes[i];
        auto rng = detail::SampleRng::at(cfg.seed ^ 0xA110CA7Eu, i);
        std::vector<double> a(n), b(n);
        for (std::size_t j = 0; j < n; ++j) {
            a[j] = rng.next_unit() < 0.15 ? 0.0 : rng.log_uniform(cfg.range_low, cfg.range_high);
            double delta =
                rng.next_unit() < 0.3 ? 0.0 : rng.log_uniform(cfg.range_low, cfg.range_high);
            b[j] = a[j] + delta;
        }
        return {a, b};
    };
    auto hit = [&](std::size_t i) {
        auto [a, b] = pair_at(i);
        try {
            return f(a) > f(b) + kTripletSlack;
        } catch (const EvaluationError&) {
            return false;  // out-of-range pair, not evidence either way
        }
    };
    auto found = detail::first_index(total, cfg.threads, hit);
    if (found) {
        auto [a, b] = pair_at(*found);
        Verdict v;
        v.status = VerdictStatus::Refuted;
        v.witness_pair = {a, b};
        v.stats = {*found + 1, cfg.seed};
        v.detail = "F(a) = " + detail::fmt_double(f(a)) + " > " + detail::fmt_double(f(b)) +
                   " = F(b) although a <= b coordinatewise";
        return v;
    }
    return Verdict::none({total, cfg.seed});
}

struct QuasiSubadditiveEstimate {
    double sup_ratio = 0.0;
    std::optional<std::pair<std::vector<double>, std::vector<double>>> witness_pair;
    bool diverging = false;
    SearchStats stats;
};

/// Supremum of F(a+b)/(F(a)+F(b)) over sampled pairs, with magnitude
/// escalation. A running sup past the divergence ceiling marks F as not
/// quasi-subadditive within the explored range.
inline QuasiSubadditiveEstimate estimate_quasi_subadditive(const Combiner& f,
                                                           const SearchConfig& cfg) {
    cfg.validate();
    const std::size_t n = f.arity();
    using Pair = std::pair<std::vector<double>, std::vector<double>>;

    std::vector<Pair> probes;
    for (double mag : {1.0, 0.5, 2.0})
        probes.emplace_back(detail_checks::constant_point(n, mag),
                            detail_checks::constant_point(n, mag));
    for (std::size_t j = 0; j < n; ++j)
        probes.emplace_back(detail_checks::axis_point(n, j, 1.0),
                            detail_checks::axis_point(n, j, 1.0));

    QuasiSubadditiveEstimate est;
    est.stats.seed = cfg.seed;

    // level 0 = probes; levels 1..6 escalate the magnitude range to 10^level
    const int kLevels = 6;
    const std::size_t per_level = std::max<std::size_t>(1, cfg.samples / kLevels);

    auto pair_at = [&](std::size_t index, double high) -> Pair {
        if (index < probes.size()) return probes[index];
        auto rng = detail::SampleRng::at(cfg.seed ^ 0x5BADD17ULL, index);
        std::vector<double> a(n), b(n);
        for (std::size_t j = 0; j < n; ++j)
            a[j] = rng.next_unit() < 0.1 ? 0.0 : rng.log_uniform(cfg.range_low, high);
        if (rng.next_unit() < 0.25) {
            b = a;  // the sup of several textbook combiners sits on the diagonal
        } else {
            for (std::size_t j = 0; j < n; ++j)
                b[j] = rng.next_unit() < 0.1 ? 0.0 : rng.log_uniform(cfg.range_low, high);
        }
        return {a, b};
    };
    auto ratio_of = [&](const Pair& p) -> double {
        const auto& [a, b] = p;
        std::vector<double> sum(n);
        for (std::size_t j = 0; j < n; ++j) sum[j] = a[j] + b[j];
        try {
            double denom = f(a) + f(b);
            if (denom == 0.0) return -detail_checks::kInf;  // skip
            return f(sum) / denom;
        } catch (const EvaluationError&) {
            // overflow past double range counts as divergence evidence
            return detail_checks::kInf;
        }
    };

    std::size_t base = 0;
    for (int level = 0; level <= kLevels; ++level) {
        const double high = level == 0 ? 1.0 : std::pow(10.0, level);
        const std::size_t count = level == 0 ? probes.size() : per_level;
        auto res = detail::sup_index(
            count, cfg.threads,
            [&](std::size_t i) { return ratio_of(pair_at(base + i, high)); });
        est.stats.samples_used += count;
        if (res && res->value > est.sup_ratio) {
            est.sup_ratio = res->value;
            est.witness_pair = pair_at(base + res->index, high);
        }
        base += count;
        if (est.sup_ratio > cfg.divergence_ceiling) {
            est.diverging = true;
            break;
        }
    }
    return est;
}

struct RangeEstimate {
    bool bounded = false;
    double a_est = 0.0;
    double c_est = 0.0;
    double k_formula = 1.0;
    bool certifies_pbm = false;  // range fits in [c, 2c]
    SearchStats stats;
};

/// Estimates inf/sup of F over nonzero inputs across escalating magnitude
/// ranges. Bounded only if both extremes stabilize across the last two
/// escalation levels.
inline RangeEstimate check_bounded_range(const Combiner& f, const SearchConfig& cfg) {
    cfg.validate();
    const std::size_t n = f.arity();
    RangeEstimate est;
    est.stats.seed = cfg.seed;

    double lo = detail_checks::kInf, hi = 0.0;
    double lo_prev = detail_checks::kInf, hi_prev = 0.0;
    const int kLevels = 6;
    const std::size_t per_level = std::max<std::size_t>(8, cfg.samples / kLevels);
    bool overflow = false;

    for (int level = 1; level <= kLevels && !overflow; ++level) {
        const double range_lo = std::pow(10.0, -level);
        const double range_hi = std::pow(10.0, level);
        std::vector<std::vector<double>> pts;
        for (std::size_t j = 0; j < n; ++j) {
            pts.push_back(detail_checks::axis_point(n, j, 1.0));
            pts.push_back(detail_checks::axis_point(n, j, range_lo));
            pts.push_back(detail_checks::axis_point(n, j, range_hi));
        }
        pts.push_back(detail_checks::constant_point(n, 1.0));
        pts.push_back(detail_checks::constant_point(n, range_lo));
        pts.push_back(detail_checks::constant_point(n, range_hi));
        for (std::size_t i = pts.size(); i < per_level; ++i) {
            auto rng = detail::SampleRng::at(cfg.seed ^ 0xB0D5ULL, (level << 24) + i);
            std::vector<double> x(n, 0.0);
            std::size_t keep = static_cast<std::size_t>(rng.next_below(n));
            for (std::size_t j = 0; j < n; ++j) {
                if (j != keep && rng.next_unit() < 0.3) continue;
                x[j] = rng.log_uniform(range_lo, range_hi);
            }
            pts.push_back(std::move(x));
        }
        for (const auto& x : pts) {
            try {
                double v = f(x);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            } catch (const EvaluationError&) {
                overflow = true;
                break;
            }
        }
        est.stats.samples_used += pts.size();
        if (level == kLevels - 1) {
            lo_prev = lo;
            hi_prev = hi;
        }
    }

    const double rel = 1e-9;
    bool stabilized = !overflow && std::isfinite(hi) && lo > 0.0 &&
                      hi <= hi_prev * (1.0 + rel) && lo >= lo_prev * (1.0 - rel);
    if (!stabilized) return est;  // NotBounded
    est.bounded = true;
    est.a_est = lo;
    est.c_est = hi;
    est.k_formula = std::max(1.0, hi / (2.0 * lo));
    est.certifies_pbm = hi <= 2.0 * lo;
    return est;
}

namespace detail_checks {

// Smallest admissible third side given the other two under cond, located by
// bisection (built-in and monotone custom generators only).
inline double lower_third_side(const SemiTriangleCondition& cond, double a, double b, double c_hi,
                               TripletMode mode) {
    auto ok = [&](double c) {
        bool good = triplet_le(a, cond.g(b, c)) && triplet_le(b, cond.g(c, a));
        if (mode == TripletMode::Symmetrized && !cond.symmetric_generator())
            good = good && triplet_le(a, cond.g(c, b)) && triplet_le(b, cond.g(a, c));
        return good;
    };
    if (ok(0.0)) return 0.0;
    if (!ok(c_hi))
        throw SamplerUnsupported("generator does not admit a triplet completion; it may not be "
                                 "monotone in its arguments");
    double lo = 0.0, hi = c_hi;
    for (int iter = 0; iter < 100 && hi - lo > 1e-12 * std::max(1.0, hi); ++iter) {
        double mid = 0.5 * (lo + hi);
        (ok(mid) ? hi : lo) = mid;
    }
    return hi;  // upper endpoint: admissible by construction
}

// Largest admissible third side: g(a,b), with both argument orders when the
// check is symmetrized.
inline double upper_third_side(const SemiTriangleCondition& cond, double a, double b,
                               TripletMode mode) {
    double c = cond.g(a, b);
    if (mode == TripletMode::Symmetrized && !cond.symmetric_generator())
        c = std::min(c, cond.g(b, a));
    return c;
}

}  // namespace detail_checks

/// Draws one (G_1,...,G_n)-triangle triplet, deterministically from
/// (cfg.seed, index). Mixes interior, boundary (c_i = g_i(a_i,b_i)) and
/// (0,l,l) coordinates per the configured fractions.
inline TripletND sample_triplet(std::span<const SemiTriangleCondition> conds,
                                const SearchConfig& cfg, std::size_t index) {
    cfg.validate();
    const std::size_t n = conds.size();
    auto rng = detail::SampleRng::at(cfg.seed ^ 0x7121917ULL, index);
    TripletND t;
    t.a.resize(n);
    t.b.resize(n);
    t.c.resize(n);

    const double u_type = rng.next_unit();
    const bool boundary = u_type < cfg.boundary_fraction;

    for (std::size_t i = 0; i < n; ++i) {
        auto crng = rng.fork(i);
        const TripletMode mode = conds[i].default_mode();
        if (crng.next_unit() < cfg.zero_fraction) {
            const double l = crng.log_uniform(cfg.range_low, cfg.range_high);
            double coord[3] = {l, l, l};
            coord[crng.next_below(3)] = 0.0;
            t.a[i] = coord[0];
            t.b[i] = coord[1];
            t.c[i] = coord[2];
            continue;
        }
        const double a = crng.log_uniform(cfg.range_low, cfg.range_high);
        const double b = crng.log_uniform(cfg.range_low, cfg.range_high);
        const double c_hi = detail_checks::upper_third_side(conds[i], a, b, mode);
        double c;
        if (boundary) {
            c = c_hi;
        } else {
            const double c_lo = detail_checks::lower_third_side(conds[i], a, b, c_hi, mode);
            const double u = crng.next_unit_open_low();
            c = c_lo + u * (c_hi - c_lo);
            if (c <= 0.0) c = c_hi;
        }
        t.a[i] = a;
        t.b[i] = b;
        t.c[i] = c;
    }

    // occasional global role rotation so violations are not always in the
    // same slot; reverted if a non-symmetric condition rejects it
    std::uint64_t perm = rng.next_below(3);
    TripletND rotated = t;
    for (std::uint64_t r = 0; r < perm; ++r) {
        std::swap(rotated.a, rotated.b);
        std::swap(rotated.b, rotated.c);
    }
    if (is_triplet_nd(conds, rotated)) return rotated;
    if (is_triplet_nd(conds, t)) return t;
    throw SamplerUnsupported("sampled triplet failed re-validation; generator is not supported");
}

namespace detail_checks {

// Deterministic probe triplets tried before random samples in falsify and
// estimate_required_K. Boundary completions of canonical pairs plus the
// zero-pattern cases.
inline std::vector<TripletND> probe_triplets(std::span<const SemiTriangleCondition> conds) {
    const std::size_t n = conds.size();
    std::vector<TripletND> probes;
    auto uniform = [&](double a, double b, double c) {
        TripletND t;
        t.a.assign(n, a);
        t.b.assign(n, b);
        t.c.assign(n, c);
        return t;
    };
    for (auto [a, b] : probe_pairs()) {
        double c = kInf;
        for (std::size_t i = 0; i < n; ++i)
            c = std::min(c, upper_third_side(conds[i], a, b, conds[i].default_mode()));
        probes.push_back(uniform(a, b, c));
    }
    probes.push_back(uniform(1.0, 1.0, 1.0));
    probes.push_back(uniform(0.0, 1.0, 1.0));
    probes.push_back(uniform(1.0, 0.0, 1.0));
    probes.push_back(uniform(1.0, 1.0, 0.0));
    if (n >= 2) {
        // zero slots staggered across coordinates
        TripletND t = uniform(1.0, 1.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (i % 3 == 0) t.a[i] = 0.0;
            else if (i % 3 == 1) t.b[i] = 0.0;
            else t.c[i] = 0.0;
        }
        probes.push_back(t);
    }
    return probes;
}

inline Triplet1D image_of(const Combiner& f, const TripletND& t) {
    return {f(t.a), f(t.b), f(t.c)};
}

inline bool zero_pattern_ok(double a, double b, double c) {
    if (a == 0.0) return b == c;
    if (b == 0.0) return a == c;
    return a == b;
}

// Minimal K making (a,b,c) a B_K-triplet; +inf if none exists.
inline double required_k_b(const Triplet1D& t) {
    const double a = t.a, b = t.b, c = t.c;
    if (a == 0.0 || b == 0.0 || c == 0.0)
        return zero_pattern_ok(a, b, c) ? 1.0 : kInf;
    return std::max({1.0, a / (b + c), b / (c + a), c / (a + b)});
}

// Minimal K making (a,b,c) a symmetrized S_K-triplet; +inf if none exists.
inline double required_k_s(const Triplet1D& t) {
    const double a = t.a, b = t.b, c = t.c;
    if (a == 0.0 || b == 0.0 || c == 0.0)
        return zero_pattern_ok(a, b, c) ? 1.0 : kInf;
    // x <= K*y + z over all role assignments
    double k = 1.0;
    k = std::max(k, (a - c) / b);
    k = std::max(k, (a - b) / c);
    k = std::max(k, (b - c) / a);
    k = std::max(k, (b - a) / c);
    k = std::max(k, (c - b) / a);
    k = std::max(k, (c - a) / b);
    return k;
}

}  // namespace detail_checks

/// Searches for a (G_1,...,G_n)-triangle triplet whose image under F fails
/// the target condition. A refutation carries the full witness triplet,
/// re-validated exactly before returning.
inline Verdict falsify(const Combiner& f, std::span<const SemiTriangleCondition> source_conds,
                       const SemiTriangleCondition& target, const SearchConfig& cfg) {
    cfg.validate();
    if (f.arity() != source_conds.size())
        throw ArityError("combiner arity " + std::to_string(f.arity()) + " does not match " +
                         std::to_string(source_conds.size()) + " source conditions");
    const TripletMode target_mode = target.default_mode();
    const auto probes = detail_checks::probe_triplets(source_conds);
    const std::size_t total = probes.size() + cfg.samples;

    auto triplet_at = [&](std::size_t i) -> TripletND {
        if (i < probes.size()) return probes[i];
        return sample_triplet(source_conds, cfg, i);
    };
    // 0 = not a hit, 1 = image violation, 2 = evaluation error
    auto classify_index = [&](std::size_t i) -> int {
        TripletND t = triplet_at(i);
        if (!is_triplet_nd(source_conds, t)) return 0;
        try {
            Triplet1D img = detail_checks::image_of(f, t);
            return is_triplet_1d(target, img, target_mode) ? 0 : 1;
        } catch (const EvaluationError&) {
            return 2;
        }
    };
    auto found = detail::first_index(total, cfg.threads,
                                     [&](std::size_t i) { return classify_index(i) != 0; });
    if (!found) return Verdict::none({total, cfg.seed});

    TripletND witness = triplet_at(*found);
    if (classify_index(*found) == 2) {
        Triplet1D img{};
        try {
            img = detail_checks::image_of(f, witness);
        } catch (const EvaluationError& e) {
            throw EvaluationError(std::string("combiner failed on a valid source triplet: ") +
                                  e.what());
        }
        (void)img;
    }
    // replay: both sides of the refutation must reproduce exactly
    Triplet1D img = detail_checks::image_of(f, witness);
    if (!is_triplet_nd(source_conds, witness) || is_triplet_1d(target, img, target_mode))
        throw Error("internal error: falsification witness failed replay");
    Verdict v;
    v.status = VerdictStatus::Refuted;
    v.witness_triplet = witness;
    v.stats = {*found + 1, cfg.seed};
    v.detail = "image (" + detail::fmt_double(img.a) + ", " + detail::fmt_double(img.b) + ", " +
               detail::fmt_double(img.c) + ") is not a " + target.to_text() + "-triangle triplet";
    return v;
}

enum class TargetFamily { B, S };

struct RequiredKEstimate {
    double sup_k = 1.0;
    bool diverging = false;
    std::optional<TripletND> witness;
    SearchStats stats;
};

/// Over sampled source triplets, the minimal constant making the image an
/// H_K-triplet, tracked as a running sup under magnitude escalation.
/// Divergence past the ceiling is evidence that no finite constant works.
inline RequiredKEstimate estimate_required_K(const Combiner& f,
                                             std::span<const SemiTriangleCondition> source_conds,
                                             TargetFamily family, const SearchConfig& cfg) {
    cfg.validate();
    if (f.arity() != source_conds.size())
        throw ArityError("combiner arity does not match the source condition list");
    const auto probes = detail_checks::probe_triplets(source_conds);

    RequiredKEstimate est;
    est.stats.seed = cfg.seed;

    auto k_of = [&](const TripletND& t) -> double {
        if (!is_triplet_nd(source_conds, t)) return -detail_checks::kInf;  // skip
        try {
            Triplet1D img = detail_checks::image_of(f, t);
            return family == TargetFamily::B ? detail_checks::required_k_b(img)
                                             : detail_checks::required_k_s(img);
        } catch (const EvaluationError&) {
            return detail_checks::kInf;
        }
    };

    const int kLevels = 6;
    const std::size_t per_level = std::max<std::size_t>(1, cfg.samples / kLevels);
    std::size_t base = 0;
    for (int level = 0; level <= kLevels; ++level) {
        SearchConfig level_cfg = cfg;
        if (level > 0) {
            level_cfg.range_low = std::max(cfg.range_low, std::pow(10.0, -level));
            level_cfg.range_high = std::min(cfg.range_high, std::pow(10.0, level));
            if (level_cfg.range_high < level_cfg.range_low)
                level_cfg.range_high = level_cfg.range_low;
        }
        const std::size_t count = level == 0 ? probes.size() : per_level;
        auto triplet_at = [&](std::size_t i) -> TripletND {
            if (level == 0) return probes[i];
            return sample_triplet(source_conds, level_cfg, base + i);
        };
        auto res = detail::sup_index(count, cfg.threads,
                                     [&](std::size_t i) { return k_of(triplet_at(i)); });
        est.stats.samples_used += count;
        if (res && res->value > est.sup_k) {
            est.sup_k = res->value;
            est.witness = triplet_at(res->index);
        }
        base += count;
        if (est.sup_k > cfg.divergence_ceiling) {
            est.diverging = true;
            break;
        }
    }
    return est;
}

/// Sampled (and, for closed-form kinds, analytic) test of the pointwise
/// generator order g(a,b) <= h(a,b), i.e. condition G implies H.
inline Verdict condition_implies(const SemiTriangleCondition& g, const SemiTriangleCondition& h,
                                 const SearchConfig& cfg) {
    cfg.validate();
    auto linear_coeffs =
        [](const SemiTriangleCondition& c) -> std::optional<std::pair<double, double>> {
        switch (c.kind()) {
            case ConditionKind::Metric: return std::make_pair(1.0, 1.0);
            case ConditionKind::BMetric:
                return std::make_pair(c.relaxation_constant(), c.relaxation_constant());
            case ConditionKind::StrongB: return std::make_pair(c.relaxation_constant(), 1.0);
            default: return std::nullopt;
        }
    };
    auto refuted_at = [&](double a, double b) {
        Verdict v;
        v.status = VerdictStatus::Refuted;
        v.witness_ab = {a, b};
        v.detail = "g(" + detail::fmt_double(a) + ", " + detail::fmt_double(b) + ") = " +
                   detail::fmt_double(g.g(a, b)) + " > " + detail::fmt_double(h.g(a, b)) +
                   " = h(" + detail::fmt_double(a) + ", " + detail::fmt_double(b) + ")";
        v.stats.seed = cfg.seed;
        return v;
    };

    auto closed_form_witness = [&]() -> Verdict {
        // canonical witnesses, tried smallest-first
        for (auto [a, b] : {std::pair{1.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 2.0}, {2.0, 1.0}})
            if (g.g(a, b) > h.g(a, b)) return refuted_at(a, b);
        throw Error("internal error: closed-form order refutation lost its witness");
    };
    auto gl = linear_coeffs(g), hl = linear_coeffs(h);
    if (gl && hl) {
        if (gl->first <= hl->first && gl->second <= hl->second)
            return Verdict::proved("pointwise coefficient comparison: (" +
                                   detail::fmt_double(gl->first) + ")a + (" +
                                   detail::fmt_double(gl->second) + ")b <= (" +
                                   detail::fmt_double(hl->first) + ")a + (" +
                                   detail::fmt_double(hl->second) + ")b");
        return closed_form_witness();
    }
    if (g.kind() == ConditionKind::Ultrametric &&
        (hl || h.kind() == ConditionKind::Ultrametric))
        return Verdict::proved("max{a,b} is the least nonreducing generator");
    if (h.kind() == ConditionKind::Ultrametric && gl) {
        // any nonreducing linear generator strictly exceeds max at (1,1)
        return closed_form_witness();
    }

    // sampled comparison for psi / custom generators
    const std::size_t total = cfg.samples;
    auto pair_at = [&](std::size_t i) -> std::pair<double, double> {
        if (i == 0) return {1.0, 1.0};
        if (i == 1) return {1.0, 0.0};
        if (i == 2) return {0.0, 1.0};
        auto rng = detail::SampleRng::at(cfg.seed ^ 0x1106ULL, i);
        auto draw = [&] {
            return rng.next_unit() < 0.1 ? 0.0 : rng.log_uniform(cfg.range_low, cfg.range_high);
        };
        return {draw(), draw()};
    };
    auto found = detail::first_index(total, cfg.threads, [&](std::size_t i) {
        auto [a, b] = pair_at(i);
        return g.g(a, b) > h.g(a, b);
    });
    if (found) {
        auto [a, b] = pair_at(*found);
        Verdict v = refuted_at(a, b);
        v.stats.samples_used = *found + 1;
        return v;
    }
    return Verdict::none({total, cfg.seed});
}

// ---------------------------------------------------------------------------
// Classification

namespace detail_checks {

struct BuiltinFacts {
    std::optional<bool> amenable;
    std::optional<bool> monotone;
    std::optional<double> s;  // provable quasi-subadditivity constant
    std::optional<std::pair<double, double>> range;  // provable range off zero
};

inline BuiltinFacts builtin_facts(Builtin b, std::size_t n) {
    switch (b) {
        case Builtin::Mean:
        case Builtin::Sum:
        case Builtin::Max:
        case Builtin::Euclid:
            return {true, true, 1.0, std::nullopt};
        case Builtin::Min:
            if (n == 1) return {true, true, 1.0, std::nullopt};
            return {false, true, std::nullopt, std::nullopt};
        case Builtin::SumSq:
            return {true, true, 2.0, std::nullopt};
        case Builtin::GeoMean:
            if (n == 1) return {true, true, 1.0, std::nullopt};
            return {false, true, std::nullopt, std::nullopt};
        case Builtin::ExpSum:
            return {false, true, std::nullopt, std::nullopt};  // F(0) = 1
        case Builtin::StepPbm:
            return {true, false, std::nullopt, std::make_pair(1.0, 3.0)};
        case Builtin::StepBounded:
            return {true, false, std::nullopt, std::make_pair(1.0, 2.0)};
    }
    return {};
}

// Constant from the iterated quasi-subadditivity bound, for an integer
// source constant K: s' = (s^{K+1} - s^2)/(s - 1) + s^K, degenerating to K
// at s = 1.
inline double chained_subadditivity_constant(double s, int k) {
    if (s == 1.0) return static_cast<double>(k);
    return (std::pow(s, k + 1) - s * s) / (s - 1.0) + std::pow(s, k);
}

struct ClassMeta {
    const char* name;
    int src_rank;  // source family: M=0 < S=1 < B=2 (larger = more spaces)
    int tgt_rank;  // target strength: B=0 < S=1 < M=2
    char target;   // 'M', 'S' or 'B'
    char source;
};

inline const std::vector<ClassMeta>& class_metas() {
    static const std::vector<ClassMeta> metas{
        {"P_M", 0, 2, 'M', 'M'},  {"P_B", 2, 0, 'B', 'B'},  {"P_MB", 0, 0, 'B', 'M'},
        {"P_BM", 2, 2, 'M', 'B'}, {"P_SB", 1, 0, 'B', 'S'}, {"P_SM", 1, 2, 'M', 'S'},
        {"P_S", 1, 1, 'S', 'S'},  {"P_BS", 2, 1, 'S', 'B'},
    };
    return metas;
}

inline bool class_subset(const ClassMeta& a, const ClassMeta& b) {
    // every member of class a is a member of class b
    return a.src_rank >= b.src_rank && a.tgt_rank >= b.tgt_rank;
}

}  // namespace detail_checks

struct ClassificationReport {
    std::string combiner_text;
    std::size_t arity = 0;
    SearchConfig config;

    Verdict amenable;
    Verdict monotone;
    QuasiSubadditiveEstimate quasi;
    std::optional<double> known_s;
    RangeEstimate range;
    std::optional<std::pair<double, double>> known_range;

    // fixed class order: P_M, P_B, P_MB, P_BM, P_SB, P_SM, P_S, P_BS
    std::vector<std::pair<std::string, Verdict>> classes;
    std::map<std::string, double> constants;
    std::vector<std::string> notes;

    const Verdict& verdict(std::string_view cls) const {
        for (const auto& [name, v] : classes)
            if (name == cls) return v;
        throw DomainError("unknown class '" + std::string(cls) + "'");
    }

    nlohmann::json to_json() const {
        nlohmann::json cls = nlohmann::json::object();
        for (const auto& [name, v] : classes) cls[name] = v.to_json();
        nlohmann::json consts = nlohmann::json::object();
        for (const auto& [name, v] : constants) consts[name] = v;
        nlohmann::json j{{"combiner", combiner_text},
                         {"arity", arity},
                         {"seed", config.seed},
                         {"samples", config.samples},
                         {"amenable", amenable.to_json()},
                         {"monotone", monotone.to_json()},
                         {"quasi_subadditive",
                          {{"sup_ratio", quasi.sup_ratio}, {"diverging", quasi.diverging}}},
                         {"classes", std::move(cls)},
                         {"constants", std::move(consts)},
                         {"notes", notes}};
        if (known_s) j["known_s"] = *known_s;
        if (range.bounded)
            j["range"] = {{"a", range.a_est}, {"c", range.c_est}, {"K_formula", range.k_formula}};
        return j;
    }

    std::string to_human() const {
        std::string out;
        out += "combiner " + combiner_text + " (arity " + std::to_string(arity) + "), seed " +
               std::to_string(config.seed) + ", samples " + std::to_string(config.samples) + "\n";
        out += "  amenable:   " + to_string(amenable.status) + "  " + amenable.detail + "\n";
        out += "  monotone:   " + to_string(monotone.status) + "  " + monotone.detail + "\n";
        out += "  quasi-subadditive sup ratio: " + detail::fmt_double(quasi.sup_ratio) +
               (quasi.diverging ? " (diverging)" : "") +
               (known_s ? " [provable s = " + detail::fmt_double(*known_s) + "]" : "") + "\n";
        if (range.bounded)
            out += "  range off zero: [" + detail::fmt_double(range.a_est) + ", " +
                   detail::fmt_double(range.c_est) +
                   "], K = " + detail::fmt_double(range.k_formula) +
                   (range.certifies_pbm ? " (within [c,2c])" : "") + "\n";
        for (const auto& [name, v] : classes) {
            out += "  " + std::string(name) + ": " + to_string(v.status);
            if (v.witness_triplet) {
                auto fmt_vec = [](const std::vector<double>& x) {
                    std::string s = "(";
                    for (std::size_t i = 0; i < x.size(); ++i)
                        s += (i ? "," : "") + detail::fmt_double(x[i]);
                    return s + ")";
                };
                out += "  witness a=" + fmt_vec(v.witness_triplet->a) +
                       " b=" + fmt_vec(v.witness_triplet->b) + " c=" + fmt_vec(v.witness_triplet->c);
            } else if (v.witness_point) {
                out += "  witness x=(";
                for (std::size_t i = 0; i < v.witness_point->size(); ++i)
                    out += (i ? "," : "") + detail::fmt_double((*v.witness_point)[i]);
                out += ")";
            }
            if (!v.detail.empty()) out += "  -- " + v.detail;
            out += "\n";
        }
        for (const auto& [name, v] : constants)
            out += "  const " + name + " = " + detail::fmt_double(v) + "\n";
        for (const auto& nte : notes) out += "  note: " + nte + "\n";
        return out;
    }
};

/// Full class-membership report. Certificates (the closed-form sufficient
/// conditions, applicable to built-ins with provable properties) run first;
/// classes they leave open go to the falsifiers; verdicts then propagate
/// along the class inclusions, and P_B / P_MB are merged per their
/// equivalence.
inline ClassificationReport classify(const Combiner& f, std::size_t n, const SearchConfig& cfg) {
    cfg.validate();
    if (f.arity() != n)
        throw ArityError("combiner arity " + std::to_string(f.arity()) + " does not match n = " +
                         std::to_string(n));
    using namespace detail_checks;

    ClassificationReport rep;
    rep.combiner_text = f.to_text();
    rep.arity = n;
    rep.config = cfg;

    BuiltinFacts facts;
    if (f.builtin_kind()) facts = builtin_facts(*f.builtin_kind(), n);

    rep.amenable = check_amenable(f, cfg);
    if (facts.amenable == true && rep.amenable.status == VerdictStatus::NoViolationFound) {
        rep.amenable.status = VerdictStatus::Proved;
        rep.amenable.detail = "built-in with provable amenability";
    }
    rep.monotone = check_monotone(f, cfg);
    if (facts.monotone == true && rep.monotone.status == VerdictStatus::NoViolationFound) {
        rep.monotone.status = VerdictStatus::Proved;
        rep.monotone.detail = "built-in with provable monotonicity";
    }
    rep.quasi = estimate_quasi_subadditive(f, cfg);
    rep.known_s = facts.s;
    rep.constants["s_sup_ratio"] = rep.quasi.sup_ratio;
    if (rep.known_s) {
        rep.constants["s"] = *rep.known_s;
        rep.constants["s_prime_at_K2"] = chained_subadditivity_constant(*rep.known_s, 2);
    }
    rep.known_range = facts.range;
    rep.range = check_bounded_range(f, cfg);
    if (facts.range) {
        rep.range.bounded = true;
        rep.range.a_est = facts.range->first;
        rep.range.c_est = facts.range->second;
        rep.range.k_formula = std::max(1.0, facts.range->second / (2.0 * facts.range->first));
        rep.range.certifies_pbm = facts.range->second <= 2.0 * facts.range->first;
    }
    if (rep.range.bounded) {
        rep.constants["range_a"] = rep.range.a_est;
        rep.constants["range_c"] = rep.range.c_est;
        rep.constants["range_K_formula"] = rep.range.k_formula;
    }

    const auto& metas = class_metas();
    std::vector<Verdict> verdicts(metas.size());
    auto idx_of = [&](std::string_view name) -> std::size_t {
        for (std::size_t i = 0; i < metas.size(); ++i)
            if (name == metas[i].name) return i;
        return metas.size();
    };

    if (rep.amenable.status == VerdictStatus::Refuted) {
        for (std::size_t i = 0; i < metas.size(); ++i) {
            verdicts[i].status = VerdictStatus::Refuted;
            verdicts[i].witness_point = rep.amenable.witness_point;
            verdicts[i].stats = rep.amenable.stats;
            verdicts[i].detail = "not amenable; no semimetric property can be preserved";
        }
    } else {
        const bool amen_proved = rep.amenable.status == VerdictStatus::Proved;
        const bool mono_proved = rep.monotone.status == VerdictStatus::Proved;

        auto set_proved = [&](std::string_view name, const std::string& why) {
            auto& v = verdicts[idx_of(name)];
            if (v.status != VerdictStatus::Refuted) {
                v.status = VerdictStatus::Proved;
                v.detail = why;
            }
        };
        if (amen_proved && mono_proved && rep.known_s) {
            const std::string why = "amenable + monotone + quasi-subadditive (s = " +
                                    detail::fmt_double(*rep.known_s) + ") sufficiency";
            set_proved("P_B", why);
            set_proved("P_MB", why);
            set_proved("P_SB", why);
            if (*rep.known_s == 1.0) {
                set_proved("P_M", "amenable + monotone + subadditive sufficiency");
                set_proved("P_S", "amenable + monotone + subadditive sufficiency");
            }
        }
        if (amen_proved && rep.known_range) {
            const double lo = rep.known_range->first, hi = rep.known_range->second;
            const std::string base_why = "amenable with range [" + detail::fmt_double(lo) + ", " +
                                         detail::fmt_double(hi) + "] off zero";
            set_proved("P_B", base_why + "; K = max{1, c/2a} = " +
                                  detail::fmt_double(std::max(1.0, hi / (2.0 * lo))));
            set_proved("P_MB", base_why);
            set_proved("P_SB", base_why);
            set_proved("P_BS", base_why + "; K = max{1, c/a - 1}");
            set_proved("P_S", base_why);
            if (hi <= 2.0 * lo)
                set_proved("P_BM", base_why + "; range within [c, 2c]");
        }

        // falsifiers for everything still open; P_MB is derived from P_B below
        const auto mk_conds = [&](char source) {
            std::vector<SemiTriangleCondition> conds;
            conds.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (source == 'M') conds.push_back(SemiTriangleCondition::metric());
                else if (source == 'B') conds.push_back(SemiTriangleCondition::b_metric(2.0));
                else conds.push_back(SemiTriangleCondition::strong_b(2.0));
            }
            return conds;
        };
        for (std::size_t i = 0; i < metas.size(); ++i) {
            const auto& meta = metas[i];
            if (verdicts[i].status == VerdictStatus::Proved) continue;
            if (std::string_view(meta.name) == "P_MB") continue;
            auto conds = mk_conds(meta.source);
            if (meta.target == 'M') {
                verdicts[i] = falsify(f, conds, SemiTriangleCondition::metric(), cfg);
            } else {
                auto est = estimate_required_K(
                    f, conds, meta.target == 'B' ? TargetFamily::B : TargetFamily::S, cfg);
                rep.constants[std::string("K_sup_") + meta.name] =
                    std::isfinite(est.sup_k) ? est.sup_k : cfg.divergence_ceiling;
                Verdict v;
                v.stats = est.stats;
                if (est.diverging) {
                    v.status = VerdictStatus::Refuted;
                    v.witness_triplet = est.witness;
                    v.detail = "required constant exceeded the divergence ceiling " +
                               detail::fmt_double(cfg.divergence_ceiling) +
                               "; no admissible K found in the explored range";
                } else {
                    v.status = VerdictStatus::NoViolationFound;
                    v.detail = "largest required constant observed: " +
                               detail::fmt_double(est.sup_k);
                }
                verdicts[i] = v;
            }
        }

        // P_MB and P_B coincide; the verdicts are kept identical verbatim
        {
            std::size_t b = idx_of("P_B"), mb = idx_of("P_MB");
            if (verdicts[mb].status == VerdictStatus::Proved &&
                verdicts[b].status != VerdictStatus::Proved)
                verdicts[b] = verdicts[mb];
            else
                verdicts[mb] = verdicts[b];
        }

        // propagate along inclusions to a fixpoint
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t i = 0; i < metas.size(); ++i) {
                for (std::size_t j = 0; j < metas.size(); ++j) {
                    if (i == j || !class_subset(metas[i], metas[j])) continue;
                    // metas[i] subset of metas[j]
                    if (verdicts[i].status == VerdictStatus::Proved &&
                        verdicts[j].status == VerdictStatus::NoViolationFound) {
                        verdicts[j] = Verdict::proved(std::string("by inclusion from ") +
                                                      metas[i].name);
                        changed = true;
                    }
                    if (verdicts[j].status == VerdictStatus::Refuted &&
                        verdicts[i].status == VerdictStatus::NoViolationFound) {
                        verdicts[i] = verdicts[j];
                        verdicts[i].detail += std::string(" (inherited from ") + metas[j].name + ")";
                        changed = true;
                    }
                }
            }
            // keep the equivalence in sync with propagation
            std::size_t b = idx_of("P_B"), mb = idx_of("P_MB");
            if (verdicts[b].status != verdicts[mb].status) {
                if (verdicts[b].status == VerdictStatus::NoViolationFound) verdicts[b] = verdicts[mb];
                else verdicts[mb] = verdicts[b];
                changed = true;
            }
        }
    }

    for (std::size_t i = 0; i < metas.size(); ++i)
        rep.classes.emplace_back(metas[i].name, std::move(verdicts[i]));
    if (f.builtin_kind() == Builtin::StepPbm) {
        rep.notes.push_back(
            "the [c,2c] certificate does not apply (range reaches 3); membership in P_BM is "
            "supported by falsification only");
    }
    return rep;
}

}  // namespace prodmetric

#endif  // PRODMETRIC_CHECKERS_HPP
