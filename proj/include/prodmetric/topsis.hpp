#ifndef PRODMETRIC_TOPSIS_HPP
#define PRODMETRIC_TOPSIS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "prodmetric/checkers.hpp"
#include "prodmetric/core.hpp"
#include "prodmetric/errors.hpp"

namespace prodmetric {

enum class Direction { Benefit, Cost };

struct DecisionProblem {
    std::vector<std::string> alternatives;           // m
    std::vector<std::string> criteria;               // n
    std::vector<std::vector<double>> matrix;         // m x n, nonnegative
    std::vector<double> weights;                     // n, positive, sums to 1
    std::vector<Direction> directions;               // n

    std::size_t m() const { return alternatives.size(); }
    std::size_t n() const { return criteria.size(); }

    void validate() const {
        if (criteria.empty()) throw DomainError("field 'criteria' must be nonempty");
        if (alternatives.empty()) throw DomainError("field 'alternatives' must be nonempty");
        if (matrix.size() != m())
            throw DomainError("field 'matrix' has " + std::to_string(matrix.size()) +
                              " rows, expected " + std::to_string(m()));
        for (std::size_t i = 0; i < m(); ++i) {
            if (matrix[i].size() != n())
                throw DomainError("field 'matrix' row " + std::to_string(i) + " has " +
                                  std::to_string(matrix[i].size()) + " entries, expected " +
                                  std::to_string(n()));
            for (double v : matrix[i])
                if (!(v >= 0.0) || !std::isfinite(v))
                    throw DomainError("field 'matrix' must contain finite nonnegative values");
        }
        if (weights.size() != n())
            throw DomainError("field 'weights' has " + std::to_string(weights.size()) +
                              " entries, expected " + std::to_string(n()));
        double wsum = 0.0;
        for (double w : weights) {
            if (!(w > 0.0)) throw DomainError("field 'weights' must be strictly positive");
            wsum += w;
        }
        if (std::abs(wsum - 1.0) > 1e-9)
            throw DomainError("field 'weights' must sum to 1 (got " + detail::fmt_double(wsum) +
                              ")");
        if (directions.size() != n())
            throw DomainError("field 'directions' has " + std::to_string(directions.size()) +
                              " entries, expected " + std::to_string(n()));
    }

    static DecisionProblem from_json(const nlohmann::json& j) {
        DecisionProblem p;
        auto need = [&](const char* field) -> const nlohmann::json& {
            if (!j.contains(field))
                throw DomainError(std::string("missing field '") + field + "'");
            return j.at(field);
        };
        need("alternatives").get_to(p.alternatives);
        need("criteria").get_to(p.criteria);
        need("matrix").get_to(p.matrix);
        need("weights").get_to(p.weights);
        for (const auto& d : need("directions")) {
            const std::string s = d.get<std::string>();
            if (s == "benefit") p.directions.push_back(Direction::Benefit);
            else if (s == "cost") p.directions.push_back(Direction::Cost);
            else
                throw DomainError("field 'directions' entries must be \"benefit\" or \"cost\" "
                                  "(got \"" + s + "\")");
        }
        p.validate();
        return p;
    }

    nlohmann::json to_json() const {
        nlohmann::json dirs = nlohmann::json::array();
        for (Direction d : directions) dirs.push_back(d == Direction::Benefit ? "benefit" : "cost");
        return {{"alternatives", alternatives}, {"criteria", criteria}, {"matrix", matrix},
                {"weights", weights},           {"directions", dirs}};
    }
};

struct TopsisResult {
    std::vector<std::vector<double>> normalized;  // weighted normalized matrix
    std::vector<double> pis, nis;
    std::vector<double> d_plus, d_minus;
    std::vector<double> closeness;
    std::vector<std::size_t> ranking;  // indices, best first
    std::vector<std::string> warnings;

    nlohmann::json to_json(const DecisionProblem& p) const {
        nlohmann::json ranked = nlohmann::json::array();
        for (std::size_t i : ranking)
            ranked.push_back({{"alternative", p.alternatives[i]},
                              {"closeness", closeness[i]}});
        return {{"normalized", normalized}, {"pis", pis},           {"nis", nis},
                {"d_plus", d_plus},         {"d_minus", d_minus},   {"closeness", closeness},
                {"ranking", ranked},        {"warnings", warnings}};
    }
};

/// Weighted vector normalization: v_ij = w_j * x_ij / sqrt(sum_i x_ij^2).
inline std::vector<std::vector<double>> normalize(const DecisionProblem& p) {
    p.validate();
    std::vector<double> norms(p.n(), 0.0);
    for (const auto& row : p.matrix)
        for (std::size_t j = 0; j < p.n(); ++j) norms[j] += row[j] * row[j];
    for (std::size_t j = 0; j < p.n(); ++j) {
        if (norms[j] == 0.0)
            throw DegenerateCriterion("criterion '" + p.criteria[j] +
                                      "' is all-zero and cannot be normalized");
        norms[j] = std::sqrt(norms[j]);
    }
    std::vector<std::vector<double>> v(p.m(), std::vector<double>(p.n()));
    for (std::size_t i = 0; i < p.m(); ++i)
        for (std::size_t j = 0; j < p.n(); ++j)
            v[i][j] = p.weights[j] * p.matrix[i][j] / norms[j];
    return v;
}

inline std::pair<std::vector<double>, std::vector<double>> ideals(
    const std::vector<std::vector<double>>& normalized, const std::vector<Direction>& directions) {
    if (normalized.empty()) throw DomainError("normalized matrix must be nonempty");
    const std::size_t n = directions.size();
    std::vector<double> pis(n), nis(n);
    for (std::size_t j = 0; j < n; ++j) {
        double lo = normalized[0][j], hi = normalized[0][j];
        for (const auto& row : normalized) {
            lo = std::min(lo, row[j]);
            hi = std::max(hi, row[j]);
        }
        if (directions[j] == Direction::Benefit) {
            pis[j] = hi;
            nis[j] = lo;
        } else {
            pis[j] = lo;
            nis[j] = hi;
        }
    }
    return {pis, nis};
}

/// Full pipeline: normalize, locate ideals, combine per-criterion distances
/// with F, rank by closeness (descending, ties by input order).
inline TopsisResult rank(const DecisionProblem& p, const Combiner& f) {
    p.validate();
    if (f.arity() != p.n())
        throw ArityError("combiner arity " + std::to_string(f.arity()) +
                         " does not match the number of criteria " + std::to_string(p.n()));

    TopsisResult r;
    {
        SearchConfig probe_cfg;
        probe_cfg.samples = 2000;
        Verdict amen = check_amenable(f, probe_cfg);
        if (amen.status == VerdictStatus::Refuted)
            r.warnings.push_back("combiner is not amenable (" + amen.detail +
                                 "); distances may misbehave");
    }

    r.normalized = normalize(p);
    std::tie(r.pis, r.nis) = ideals(r.normalized, p.directions);

    r.d_plus.resize(p.m());
    r.d_minus.resize(p.m());
    r.closeness.resize(p.m());
    std::vector<double> diff(p.n());
    bool degenerate_tie = false;
    for (std::size_t i = 0; i < p.m(); ++i) {
        for (std::size_t j = 0; j < p.n(); ++j) diff[j] = std::abs(r.normalized[i][j] - r.pis[j]);
        r.d_plus[i] = f(diff);
        for (std::size_t j = 0; j < p.n(); ++j) diff[j] = std::abs(r.normalized[i][j] - r.nis[j]);
        r.d_minus[i] = f(diff);
        const double denom = r.d_plus[i] + r.d_minus[i];
        if (denom == 0.0) {
            r.closeness[i] = 0.5;  // alternative coincides with both ideals
            degenerate_tie = true;
        } else {
            r.closeness[i] = r.d_minus[i] / denom;
        }
    }
    if (degenerate_tie)
        r.warnings.push_back(
            "at least one alternative coincides with both ideals; its closeness is fixed at 0.5");

    r.ranking.resize(p.m());
    std::iota(r.ranking.begin(), r.ranking.end(), std::size_t{0});
    std::stable_sort(r.ranking.begin(), r.ranking.end(), [&](std::size_t a, std::size_t b) {
        return r.closeness[a] > r.closeness[b];
    });
    return r;
}

}  // namespace prodmetric

#endif  // PRODMETRIC_TOPSIS_HPP
