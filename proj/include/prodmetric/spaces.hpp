#ifndef PRODMETRIC_SPACES_HPP
#define PRODMETRIC_SPACES_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prodmetric/core.hpp"
#include "prodmetric/detail/format.hpp"
#include "prodmetric/errors.hpp"

namespace prodmetric {

/// Finite set of labeled points with a symmetric, nonnegative distance matrix
/// that vanishes exactly on the diagonal.
class FiniteSemimetricSpace {
public:
    FiniteSemimetricSpace() = default;

    FiniteSemimetricSpace(std::vector<std::string> labels,
                          std::vector<std::vector<double>> matrix)
        : labels_(std::move(labels)) {
        const std::size_t m = labels_.size();
        if (matrix.size() != m)
            throw DomainError("matrix has " + std::to_string(matrix.size()) + " rows but " +
                              std::to_string(m) + " labels");
        dist_.resize(m * m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            if (matrix[i].size() != m)
                throw DomainError("matrix row " + std::to_string(i) + " has " +
                                  std::to_string(matrix[i].size()) + " entries, expected " +
                                  std::to_string(m));
            for (std::size_t j = 0; j < m; ++j) dist_[i * m + j] = matrix[i][j];
        }
    }

    std::size_t size() const { return labels_.size(); }
    const std::vector<std::string>& labels() const { return labels_; }

    double dist(std::size_t i, std::size_t j) const { return dist_[i * size() + j]; }

    double diameter() const {
        double r = 0.0;
        for (double v : dist_) r = std::max(r, v);
        return r;
    }

    nlohmann::json to_json() const {
        nlohmann::json matrix = nlohmann::json::array();
        const std::size_t m = size();
        for (std::size_t i = 0; i < m; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t j = 0; j < m; ++j) row.push_back(dist(i, j));
            matrix.push_back(std::move(row));
        }
        return {{"labels", labels_}, {"matrix", std::move(matrix)}};
    }

    static FiniteSemimetricSpace from_json(const nlohmann::json& j) {
        if (!j.is_object() || !j.contains("labels") || !j.contains("matrix"))
            throw DomainError("space file must be an object with 'labels' and 'matrix' fields");
        std::vector<std::string> labels;
        try {
            labels = j.at("labels").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception&) {
            throw DomainError("field 'labels' must be an array of strings");
        }
        std::vector<std::vector<double>> matrix;
        try {
            matrix = j.at("matrix").get<std::vector<std::vector<double>>>();
        } catch (const nlohmann::json::exception&) {
            throw DomainError("field 'matrix' must be a square array of numbers");
        }
        return FiniteSemimetricSpace(std::move(labels), std::move(matrix));
    }

private:
    std::vector<std::string> labels_;
    std::vector<double> dist_;  // row-major m*m
};

struct AxiomViolation {
    enum class Type { NegativeEntry, NonzeroDiagonal, ZeroOffDiagonal, Asymmetry, NonFinite };
    Type type;
    std::size_t i = 0, j = 0;

    std::string describe() const {
        auto at = [this] { return " at (" + std::to_string(i) + ", " + std::to_string(j) + ")"; };
        switch (type) {
            case Type::NegativeEntry: return "negative distance" + at();
            case Type::NonzeroDiagonal: return "nonzero diagonal entry" + at();
            case Type::ZeroOffDiagonal: return "zero off-diagonal distance (S1)" + at();
            case Type::Asymmetry: return "asymmetry (S2)" + at();
            case Type::NonFinite: return "non-finite distance" + at();
        }
        return {};
    }
};

/// Checks axioms (S1) and (S2). An empty result means the space is valid.
inline std::vector<AxiomViolation> validate(const FiniteSemimetricSpace& s) {
    std::vector<AxiomViolation> out;
    const std::size_t m = s.size();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double v = s.dist(i, j);
            if (!std::isfinite(v)) {
                out.push_back({AxiomViolation::Type::NonFinite, i, j});
                continue;
            }
            if (v < 0.0) out.push_back({AxiomViolation::Type::NegativeEntry, i, j});
            if (i == j && v != 0.0) out.push_back({AxiomViolation::Type::NonzeroDiagonal, i, j});
            if (i < j) {
                if (v != s.dist(j, i)) out.push_back({AxiomViolation::Type::Asymmetry, i, j});
                if (v == 0.0) out.push_back({AxiomViolation::Type::ZeroOffDiagonal, i, j});
            }
        }
    }
    return out;
}

/// Minimal relaxation constants of a space, with the ordered triples
/// attaining them. Exact by exhaustive enumeration.
struct RelaxationProfile {
    double k_b = 1.0;
    double k_s = 1.0;
    std::optional<std::array<std::size_t, 3>> worst_triple_b;  // (x, y, z)
    std::optional<std::array<std::size_t, 3>> worst_triple_s;

    nlohmann::json to_json(const FiniteSemimetricSpace& s) const {
        auto triple = [&](const std::optional<std::array<std::size_t, 3>>& t) -> nlohmann::json {
            if (!t) return nullptr;
            return {s.labels()[(*t)[0]], s.labels()[(*t)[1]], s.labels()[(*t)[2]]};
        };
        return {{"k_b", k_b},
                {"k_s", k_s},
                {"worst_triple_b", triple(worst_triple_b)},
                {"worst_triple_s", triple(worst_triple_s)}};
    }
};

/// k_b = max over ordered triples (x,y,z), x != z, y distinct from both, of
/// d(x,z)/(d(x,y)+d(y,z)); k_s the analogous strong form. Both clamped below
/// at 1. Ties broken by the lexicographically smallest triple.
inline RelaxationProfile min_relaxation(const FiniteSemimetricSpace& s) {
    RelaxationProfile p;
    const std::size_t m = s.size();
    if (m < 2) return p;  // degenerate space: K = 1, no witness
    double best_b = -1.0, best_s = -1.0;
    for (std::size_t x = 0; x < m; ++x) {
        for (std::size_t y = 0; y < m; ++y) {
            if (y == x) continue;
            for (std::size_t z = 0; z < m; ++z) {
                if (z == x || z == y) continue;
                const double dxz = s.dist(x, z);
                const double dxy = s.dist(x, y);
                const double dyz = s.dist(y, z);
                const double rb = dxz / (dxy + dyz);
                if (rb > best_b) {
                    best_b = rb;
                    p.worst_triple_b = {x, y, z};
                }
                const double rs = (dxz - dyz) / dxy;
                if (rs > best_s) {
                    best_s = rs;
                    p.worst_triple_s = {x, y, z};
                }
            }
        }
    }
    if (!p.worst_triple_b) {
        // fewer than three points: only pairs, every condition holds with K = 1
        return p;
    }
    p.k_b = std::max(1.0, best_b);
    p.k_s = std::max(1.0, best_s);
    return p;
}

/// Realizes a triplet as a 3-point space with pairwise distances a, b, c
/// (d(x,y)=a, d(y,z)=b, d(x,z)=c). A zero coordinate identifies its endpoint
/// pair per the (0,l,l) rule, shrinking the space.
inline FiniteSemimetricSpace space_from_triplet(const Triplet1D& t,
                                                const std::string& label_prefix = "p") {
    auto lbl = [&](int i) { return label_prefix + std::to_string(i); };
    const double a = t.a, b = t.b, c = t.c;
    int zeros = (a == 0.0) + (b == 0.0) + (c == 0.0);
    if (zeros == 3) return FiniteSemimetricSpace({lbl(1)}, {{0.0}});
    if (zeros >= 1) {
        double l;
        if (a == 0.0 && b == c) l = b;            // x = y, keep {x, z}
        else if (b == 0.0 && a == c) l = a;       // y = z, keep {x, y}
        else if (c == 0.0 && a == b) l = a;       // x = z, keep {x, y}
        else
            throw InvalidTriplet("zero pattern of (" + detail::fmt_double(a) + ", " +
                                 detail::fmt_double(b) + ", " + detail::fmt_double(c) +
                                 ") is not a permutation of (0,l,l)");
        return FiniteSemimetricSpace({lbl(1), lbl(2)}, {{0.0, l}, {l, 0.0}});
    }
    return FiniteSemimetricSpace({lbl(1), lbl(2), lbl(3)},
                                 {{0.0, a, c}, {a, 0.0, b}, {c, b, 0.0}});
}

/// Disjoint union of two spaces; every cross-pair sits at max{r1, r2}, which
/// attains the diameter and constant stated by the gluing lemma.
inline FiniteSemimetricSpace glue_pair(const FiniteSemimetricSpace& s1,
                                       const FiniteSemimetricSpace& s2) {
    const std::size_t m1 = s1.size(), m2 = s2.size();
    if (m1 + m2 < 3)
        throw TooSmall("glued space must have at least three points, got " +
                       std::to_string(m1 + m2));
    for (const auto& l : s1.labels())
        if (std::find(s2.labels().begin(), s2.labels().end(), l) != s2.labels().end())
            throw LabelClash("label '" + l + "' appears in both operands");
    const double cross = std::max(s1.diameter(), s2.diameter());
    std::vector<std::string> labels = s1.labels();
    labels.insert(labels.end(), s2.labels().begin(), s2.labels().end());
    const std::size_t m = m1 + m2;
    std::vector<std::vector<double>> d(m, std::vector<double>(m, cross));
    for (std::size_t i = 0; i < m1; ++i)
        for (std::size_t j = 0; j < m1; ++j) d[i][j] = s1.dist(i, j);
    for (std::size_t i = 0; i < m2; ++i)
        for (std::size_t j = 0; j < m2; ++j) d[m1 + i][m1 + j] = s2.dist(i, j);
    return FiniteSemimetricSpace(std::move(labels), std::move(d));
}

/// Iterated gluing of triplet blocks, left to right. Block points are labeled
/// "<block>.<point>" so each block stays traceable in the result.
inline FiniteSemimetricSpace glue_chain(std::span<const Triplet1D> blocks) {
    if (blocks.empty()) throw TooSmall("glue_chain needs at least one block");
    FiniteSemimetricSpace acc = space_from_triplet(blocks[0], "1.");
    for (std::size_t k = 1; k < blocks.size(); ++k) {
        FiniteSemimetricSpace next =
            space_from_triplet(blocks[k], std::to_string(k + 1) + ".");
        acc = glue_pair(acc, next);
    }
    return acc;
}

inline constexpr std::size_t kDefaultProductCap = 10000;

/// Cartesian product with distances combined by F. Validates (S1) and
/// reports non-amenability on this instance instead of returning silently.
inline FiniteSemimetricSpace product_space(std::span<const FiniteSemimetricSpace> spaces,
                                           const Combiner& f,
                                           std::size_t cap = kDefaultProductCap) {
    const std::size_t n = spaces.size();
    if (f.arity() != n)
        throw ArityError("combiner arity " + std::to_string(f.arity()) + " does not match " +
                         std::to_string(n) + " factor spaces");
    std::size_t total = 1;
    for (const auto& s : spaces) {
        if (s.size() == 0) throw TooSmall("factor space is empty");
        if (total > cap / s.size())
            throw TooLarge("product would exceed the size cap of " + std::to_string(cap) +
                           " points");
        total *= s.size();
    }

    // tuple index <-> flat index, last coordinate fastest
    std::vector<std::size_t> idx(n, 0);
    std::vector<std::string> labels;
    std::vector<std::vector<std::size_t>> tuples;
    labels.reserve(total);
    tuples.reserve(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::string l = "(";
        for (std::size_t i = 0; i < n; ++i) {
            if (i) l += ",";
            l += spaces[i].labels()[idx[i]];
        }
        l += ")";
        labels.push_back(std::move(l));
        tuples.push_back(idx);
        for (std::size_t i = n; i-- > 0;) {
            if (++idx[i] < spaces[i].size()) break;
            idx[i] = 0;
        }
    }

    std::vector<std::vector<double>> d(total, std::vector<double>(total, 0.0));
    std::vector<double> coords(n);
    for (std::size_t p = 0; p < total; ++p) {
        for (std::size_t q = p; q < total; ++q) {
            for (std::size_t i = 0; i < n; ++i)
                coords[i] = spaces[i].dist(tuples[p][i], tuples[q][i]);
            double v = f(coords);
            d[p][q] = d[q][p] = v;
            if (p == q && v != 0.0)
                throw NotAmenableOnThisInstance(
                    "combiner does not vanish on the diagonal: F(0,...,0) = " +
                        detail::fmt_double(v),
                    labels[p], labels[q]);
            if (p != q && v == 0.0)
                throw NotAmenableOnThisInstance(
                    "product distance vanishes for distinct points " + labels[p] + " and " +
                        labels[q],
                    labels[p], labels[q]);
        }
    }
    return FiniteSemimetricSpace(std::move(labels), std::move(d));
}

}  // namespace prodmetric

#endif  // PRODMETRIC_SPACES_HPP
