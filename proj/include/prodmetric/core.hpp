#ifndef PRODMETRIC_CORE_HPP
#define PRODMETRIC_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prodmetric/detail/format.hpp"
#include "prodmetric/detail/rng.hpp"
#include "prodmetric/errors.hpp"
#include "prodmetric/expr.hpp"

namespace prodmetric {

/// Slack on the <= tests in triplet checks, scaled by magnitude above 1 so
/// that boundary triplets built as c = g(a,b) survive the rounding of the
/// recomputed bound at any scale.
inline constexpr double kTripletSlack = 1e-12;

inline bool triplet_le(double lhs, double rhs) {
    return lhs <= rhs + kTripletSlack * std::max(1.0, rhs);
}

enum class ConditionKind { Metric, Ultrametric, BMetric, StrongB, TriangleFn, CustomG };

enum class TripletMode { Literal, Symmetrized };

struct Triplet1D {
    double a = 0, b = 0, c = 0;
};

struct TripletND {
    std::vector<double> a, b, c;

    std::size_t arity() const { return a.size(); }

    Triplet1D coordinate(std::size_t i) const { return {a[i], b[i], c[i]}; }
};

/// A semi-triangle condition d(x,z) <= g(d(x,y), d(y,z)) identified by its
/// nonreducing generator g.
class SemiTriangleCondition {
public:
    static SemiTriangleCondition metric() { return SemiTriangleCondition(ConditionKind::Metric); }
    static SemiTriangleCondition ultrametric() {
        return SemiTriangleCondition(ConditionKind::Ultrametric);
    }

    static SemiTriangleCondition b_metric(double k) {
        if (!(k >= 1.0))
            throw DomainError("b-metric relaxation constant must satisfy K >= 1, got " +
                              detail::fmt_double(k));
        SemiTriangleCondition c(ConditionKind::BMetric);
        c.k_ = k;
        return c;
    }

    static SemiTriangleCondition strong_b(double k) {
        if (!(k >= 1.0))
            throw DomainError("strong b-metric relaxation constant must satisfy K >= 1, got " +
                              detail::fmt_double(k));
        SemiTriangleCondition c(ConditionKind::StrongB);
        c.k_ = k;
        return c;
    }

    static SemiTriangleCondition triangle_fn(expr::Expression psi) {
        if (psi.context().kind != expr::Context::Kind::Psi)
            throw DomainError("triangle-function expression must be in variable t");
        SemiTriangleCondition c(ConditionKind::TriangleFn);
        c.expr_ = std::move(psi);
        c.validate_psi();
        return c;
    }

    static SemiTriangleCondition custom_g(expr::Expression g) {
        if (g.context().kind != expr::Context::Kind::Generator)
            throw DomainError("custom generator expression must be in variables a, b");
        SemiTriangleCondition c(ConditionKind::CustomG);
        c.expr_ = std::move(g);
        c.validate_custom_g();
        return c;
    }

    /// Text syntax: "M", "U", "B:<K>", "S:<K>", "T:<expr in t>", "G:<expr in a,b>".
    static SemiTriangleCondition parse(std::string_view text) {
        if (text == "M") return metric();
        if (text == "U") return ultrametric();
        auto colon = text.find(':');
        if (colon == 1) {
            std::string_view body = text.substr(2);
            char head = text[0];
            if (head == 'B' || head == 'S') {
                double k;
                try {
                    k = std::stod(std::string(body));
                } catch (const std::exception&) {
                    throw DomainError("cannot parse relaxation constant '" + std::string(body) + "'");
                }
                return head == 'B' ? b_metric(k) : strong_b(k);
            }
            if (head == 'T') return triangle_fn(expr::Expression::parse(body, expr::Context::psi()));
            if (head == 'G')
                return custom_g(expr::Expression::parse(body, expr::Context::generator()));
        }
        throw DomainError("unknown condition '" + std::string(text) +
                          "' (expected M, U, B:<K>, S:<K>, T:<expr>, G:<expr>)");
    }

    std::string to_text() const {
        switch (kind_) {
            case ConditionKind::Metric: return "M";
            case ConditionKind::Ultrametric: return "U";
            case ConditionKind::BMetric: return "B:" + detail::fmt_double(k_);
            case ConditionKind::StrongB: return "S:" + detail::fmt_double(k_);
            case ConditionKind::TriangleFn: return "T:" + expr_.print();
            case ConditionKind::CustomG: return "G:" + expr_.print();
        }
        return {};
    }

    ConditionKind kind() const { return kind_; }
    double relaxation_constant() const { return k_; }
    const expr::Expression& expression() const { return expr_; }

    /// Generator value g(a,b). Closed forms for the built-in kinds.
    double g(double a, double b) const {
        switch (kind_) {
            case ConditionKind::Metric: return a + b;
            case ConditionKind::Ultrametric: return std::max(a, b);
            case ConditionKind::BMetric: return k_ * (a + b);
            case ConditionKind::StrongB: return k_ * a + b;
            case ConditionKind::TriangleFn: {
                const double env[1] = {a + b};
                double v = expr_.eval(env);
                if (v < 0.0 || !std::isfinite(v))
                    throw EvaluationError("triangle function produced an invalid value");
                return v;
            }
            case ConditionKind::CustomG: {
                const double env[2] = {a, b};
                double v = expr_.eval(env);
                if (v < 0.0 || !std::isfinite(v))
                    throw EvaluationError("custom generator produced an invalid value");
                return v;
            }
        }
        throw EvaluationError("unknown condition kind");
    }

    /// The generator is known to be symmetric in its two arguments.
    bool symmetric_generator() const {
        switch (kind_) {
            case ConditionKind::Metric:
            case ConditionKind::Ultrametric:
            case ConditionKind::BMetric:
            case ConditionKind::TriangleFn:
                return true;
            default:
                return false;
        }
    }

    /// Mode downstream checks use by default: Symmetrized for the
    /// order-sensitive strong-b generator, Literal otherwise.
    TripletMode default_mode() const {
        return kind_ == ConditionKind::StrongB ? TripletMode::Symmetrized : TripletMode::Literal;
    }

private:
    explicit SemiTriangleCondition(ConditionKind kind) : kind_(kind) {}

    // Stratified magnitudes covering [0, 1e6] plus the axes.
    static std::vector<double> validation_magnitudes() {
        std::vector<double> m{0.0};
        detail::SampleRng rng = detail::SampleRng::at(0x5eed, 0);
        for (int decade = -6; decade <= 6; ++decade) {
            double lo = std::pow(10.0, decade);
            for (int j = 0; j < 7; ++j) m.push_back(lo * (1.0 + 9.0 * rng.next_unit()));
            m.push_back(lo);
        }
        m.push_back(1e6);
        std::sort(m.begin(), m.end());
        return m;
    }

    void validate_psi() {
        const double zero[1] = {0.0};
        if (expr_.eval(zero) != 0.0)
            throw DomainError("triangle function must satisfy psi(0) = 0");
        auto mags = validation_magnitudes();
        double prev = 0.0, prev_t = 0.0;
        for (double t : mags) {
            const double env[1] = {t};
            double v = expr_.eval(env);
            if (v + kTripletSlack < prev)
                throw DomainError("triangle function is decreasing between t = " +
                                  detail::fmt_double(prev_t) + " and t = " + detail::fmt_double(t));
            // nonreducing: psi(a+b) >= max{a,b} for every split, i.e. psi(t) >= t
            if (v + kTripletSlack < t)
                throw DomainError("triangle function is reducing at t = " + detail::fmt_double(t) +
                                  ": psi(t) = " + detail::fmt_double(v));
            prev = v;
            prev_t = t;
        }
    }

    void validate_custom_g() {
        auto mags = validation_magnitudes();  // ~100 values incl. 0 -> ~10^4 pairs
        for (double a : mags) {
            for (double b : mags) {
                const double env[2] = {a, b};
                double v = expr_.eval(env);
                if (v < 0.0 || !std::isfinite(v))
                    throw DomainError("custom generator produced an invalid value at (a,b) = (" +
                                      detail::fmt_double(a) + ", " + detail::fmt_double(b) + ")");
                if (v + kTripletSlack < std::max(a, b))
                    throw DomainError("custom generator is reducing at (a,b) = (" +
                                      detail::fmt_double(a) + ", " + detail::fmt_double(b) +
                                      "): g = " + detail::fmt_double(v));
            }
        }
    }

    ConditionKind kind_;
    double k_ = 1.0;
    expr::Expression expr_;
};

/// Shorthand used throughout checks and reports.
inline double g_eval(const SemiTriangleCondition& cond, double a, double b) {
    return cond.g(a, b);
}

/// One-dimensional triangle-triplet test against a semi-triangle condition.
/// Triplets with a zero coordinate are decided purely combinatorially: they
/// must be a permutation of (0,l,l).
inline bool is_triplet_1d(const SemiTriangleCondition& cond, const Triplet1D& t,
                          TripletMode mode) {
    const double a = t.a, b = t.b, c = t.c;
    if (a == 0.0 || b == 0.0 || c == 0.0) {
        if (a == 0.0) return b == c;
        if (b == 0.0) return a == c;
        return a == b;
    }
    bool literal = triplet_le(a, cond.g(b, c)) && triplet_le(b, cond.g(c, a)) &&
                   triplet_le(c, cond.g(a, b));
    if (mode == TripletMode::Literal || cond.symmetric_generator()) return literal;
    return literal && triplet_le(a, cond.g(c, b)) && triplet_le(b, cond.g(a, c)) &&
           triplet_le(c, cond.g(b, a));
}

inline bool is_triplet_1d(const SemiTriangleCondition& cond, const Triplet1D& t) {
    return is_triplet_1d(cond, t, cond.default_mode());
}

inline bool is_triplet_nd(std::span<const SemiTriangleCondition> conds, const TripletND& t,
                          TripletMode mode) {
    if (t.a.size() != conds.size() || t.b.size() != conds.size() || t.c.size() != conds.size())
        throw ArityError("triplet has " + std::to_string(t.a.size()) +
                         " coordinates but " + std::to_string(conds.size()) +
                         " conditions were given");
    for (std::size_t i = 0; i < conds.size(); ++i)
        if (!is_triplet_1d(conds[i], t.coordinate(i), mode)) return false;
    return true;
}

/// Per-coordinate default modes (Symmetrized only where the generator is
/// order-sensitive).
inline bool is_triplet_nd(std::span<const SemiTriangleCondition> conds, const TripletND& t) {
    if (t.a.size() != conds.size() || t.b.size() != conds.size() || t.c.size() != conds.size())
        throw ArityError("triplet arity mismatch");
    for (std::size_t i = 0; i < conds.size(); ++i)
        if (!is_triplet_1d(conds[i], t.coordinate(i), conds[i].default_mode())) return false;
    return true;
}

enum class Builtin {
    Mean,
    Sum,
    Max,
    Min,
    SumSq,
    Euclid,
    GeoMean,
    ExpSum,
    StepPbm,
    StepBounded,
};

inline std::string builtin_name(Builtin b) {
    switch (b) {
        case Builtin::Mean: return "mean";
        case Builtin::Sum: return "sum";
        case Builtin::Max: return "max";
        case Builtin::Min: return "min";
        case Builtin::SumSq: return "sumsq";
        case Builtin::Euclid: return "euclid";
        case Builtin::GeoMean: return "geomean";
        case Builtin::ExpSum: return "exp_sum";
        case Builtin::StepPbm: return "step_pbm";
        case Builtin::StepBounded: return "step_bounded";
    }
    return {};
}

inline std::optional<Builtin> builtin_from_name(std::string_view name) {
    for (Builtin b : {Builtin::Mean, Builtin::Sum, Builtin::Max, Builtin::Min, Builtin::SumSq,
                      Builtin::Euclid, Builtin::GeoMean, Builtin::ExpSum, Builtin::StepPbm,
                      Builtin::StepBounded})
        if (builtin_name(b) == name) return b;
    return std::nullopt;
}

/// A combiner F: R_+^n -> R_+ used to merge per-coordinate distances.
class Combiner {
public:
    static Combiner builtin(Builtin b, std::size_t arity) {
        if (arity < 1) throw ArityError("combiner arity must be at least 1");
        if (b == Builtin::StepPbm && arity != 2)
            throw ArityError("step_pbm is defined for arity 2 only");
        Combiner c;
        c.arity_ = arity;
        c.builtin_ = b;
        return c;
    }

    static Combiner expression(expr::Expression e) {
        if (e.context().kind != expr::Context::Kind::Combiner)
            throw DomainError("combiner expression must be in variables x1..xn");
        Combiner c;
        c.arity_ = e.context().arity;
        c.expr_ = std::move(e);
        return c;
    }

    /// Text syntax: "builtin:<name>" or "expr:<expression>".
    static Combiner parse(std::string_view text, std::size_t arity) {
        if (text.starts_with("builtin:")) {
            auto name = text.substr(8);
            auto b = builtin_from_name(name);
            if (!b) throw DomainError("unknown built-in combiner '" + std::string(name) + "'");
            return builtin(*b, arity);
        }
        if (text.starts_with("expr:"))
            return expression(
                expr::Expression::parse(text.substr(5), expr::Context::combiner(arity)));
        throw DomainError("combiner spec must start with 'builtin:' or 'expr:'");
    }

    std::string to_text() const {
        if (builtin_) return "builtin:" + builtin_name(*builtin_);
        return "expr:" + expr_.print();
    }

    std::size_t arity() const { return arity_; }
    std::optional<Builtin> builtin_kind() const { return builtin_; }

    double operator()(std::span<const double> x) const {
        if (x.size() != arity_)
            throw ArityError("combiner of arity " + std::to_string(arity_) + " applied to " +
                             std::to_string(x.size()) + " values");
        double v = builtin_ ? eval_builtin(*builtin_, x) : expr_.eval(x);
        if (!std::isfinite(v))
            throw EvaluationError("combiner produced a non-finite value");
        if (v < 0.0)
            throw EvaluationError("combiner produced a negative value " + detail::fmt_double(v));
        return v;
    }

private:
    static double eval_builtin(Builtin b, std::span<const double> x) {
        switch (b) {
            case Builtin::Mean:
                return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
            case Builtin::Sum:
                return std::accumulate(x.begin(), x.end(), 0.0);
            case Builtin::Max:
                return *std::max_element(x.begin(), x.end());
            case Builtin::Min:
                return *std::min_element(x.begin(), x.end());
            case Builtin::SumSq: {
                double s = 0.0;
                for (double v : x) s += v * v;
                return s;
            }
            case Builtin::Euclid: {
                double s = 0.0;
                for (double v : x) s += v * v;
                return std::sqrt(s);
            }
            case Builtin::GeoMean: {
                double p = 1.0;
                for (double v : x) p *= v;
                return std::pow(p, 1.0 / static_cast<double>(x.size()));
            }
            case Builtin::ExpSum:
                return std::exp(std::accumulate(x.begin(), x.end(), 0.0));
            case Builtin::StepPbm: {
                // 0 at (0,0), 1 at (1,0), 3 at (0,1), 2 otherwise
                if (x[0] == 0.0 && x[1] == 0.0) return 0.0;
                if (x[0] == 1.0 && x[1] == 0.0) return 1.0;
                if (x[0] == 0.0 && x[1] == 1.0) return 3.0;
                return 2.0;
            }
            case Builtin::StepBounded: {
                // 0 at the origin, 2 at the all-ones point, 1 otherwise
                bool all_zero = true, all_one = true;
                for (double v : x) {
                    all_zero = all_zero && v == 0.0;
                    all_one = all_one && v == 1.0;
                }
                if (all_zero) return 0.0;
                if (all_one) return 2.0;
                return 1.0;
            }
        }
        throw EvaluationError("unknown built-in combiner");
    }

    std::size_t arity_ = 1;
    std::optional<Builtin> builtin_;
    expr::Expression expr_;
};

inline double combiner_eval(const Combiner& f, std::span<const double> x) { return f(x); }

}  // namespace prodmetric

#endif  // PRODMETRIC_CORE_HPP
