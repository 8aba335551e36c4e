#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "prodmetric/core.hpp"

using namespace prodmetric;

TEST_CASE("condition parse / to_text round trip") {
    for (const char* text : {"M", "U", "B:2", "S:1.5", "B:3.25"}) {
        CAPTURE(text);
        CHECK(SemiTriangleCondition::parse(text).to_text() == text);
    }
    CHECK(SemiTriangleCondition::parse("T:2*t").to_text() == "T:2*t");
    CHECK(SemiTriangleCondition::parse("G:max(a, b) + 1").to_text() == "G:max(a, b) + 1");
    CHECK_THROWS_AS(SemiTriangleCondition::parse("Q:1"), DomainError);
    CHECK_THROWS_AS(SemiTriangleCondition::parse("B:x"), DomainError);
    CHECK_THROWS_AS(SemiTriangleCondition::parse(""), DomainError);
}

TEST_CASE("relaxation constants must be at least 1") {
    CHECK_THROWS_AS(SemiTriangleCondition::b_metric(0.5), DomainError);
    CHECK_THROWS_AS(SemiTriangleCondition::strong_b(0.99), DomainError);
    CHECK(SemiTriangleCondition::b_metric(1.0).relaxation_constant() == 1.0);
}

TEST_CASE("generator closed forms") {
    CHECK(g_eval(SemiTriangleCondition::metric(), 1, 2) == 3.0);
    CHECK(g_eval(SemiTriangleCondition::ultrametric(), 1, 2) == 2.0);
    CHECK(g_eval(SemiTriangleCondition::b_metric(2), 1, 2) == 6.0);
    CHECK(g_eval(SemiTriangleCondition::strong_b(2), 1, 2) == 4.0);
    CHECK(g_eval(SemiTriangleCondition::strong_b(2), 2, 1) == 5.0);  // order-sensitive
    CHECK(g_eval(SemiTriangleCondition::parse("T:2*t"), 1, 2) == 6.0);
    CHECK(g_eval(SemiTriangleCondition::parse("G:a + 2*b"), 1, 2) == 5.0);
}

TEST_CASE("nonreducing validation of user-supplied generators") {
    // reducing generators are rejected up front
    CHECK_THROWS_AS(SemiTriangleCondition::parse("G:a"), DomainError);
    CHECK_THROWS_AS(SemiTriangleCondition::parse("G:(a + b)/2"), DomainError);
    CHECK_NOTHROW(SemiTriangleCondition::parse("G:max(a, b)"));
    CHECK_NOTHROW(SemiTriangleCondition::parse("G:a + b + 1"));
    // psi(0) = 0, nondecreasing, psi(t) >= t
    CHECK_THROWS_AS(SemiTriangleCondition::parse("T:t + 1"), DomainError);
    CHECK_THROWS_AS(SemiTriangleCondition::parse("T:t/2"), DomainError);
    CHECK_THROWS_AS(SemiTriangleCondition::parse("T:t^2"), DomainError);  // reducing below 1
    CHECK_NOTHROW(SemiTriangleCondition::parse("T:t"));
    CHECK_NOTHROW(SemiTriangleCondition::parse("T:t + t^2"));
}

TEST_CASE("one-dimensional triplet checks") {
    auto M = SemiTriangleCondition::metric();
    auto B2 = SemiTriangleCondition::b_metric(2);
    auto U = SemiTriangleCondition::ultrametric();

    CHECK(is_triplet_1d(M, {1, 2, 3}));
    CHECK_FALSE(is_triplet_1d(M, {1, 2, 3.1}));
    CHECK(is_triplet_1d(M, {3, 4, 5}));
    CHECK(is_triplet_1d(B2, {1, 2, 6}));
    CHECK_FALSE(is_triplet_1d(SemiTriangleCondition::b_metric(1.9), {1, 2, 6}));
    CHECK(is_triplet_1d(U, {2, 2, 2}));
    CHECK_FALSE(is_triplet_1d(U, {1, 2, 3}));

    // boundary values pass within the fixed slack
    CHECK(is_triplet_1d(M, {1, 2, 3 + 1e-13}));
    CHECK_FALSE(is_triplet_1d(M, {1, 2, 3 + 1e-9}));
}

TEST_CASE("zero coordinates are decided combinatorially") {
    auto M = SemiTriangleCondition::metric();
    CHECK(is_triplet_1d(M, {0, 5, 5}));
    CHECK(is_triplet_1d(M, {5, 0, 5}));
    CHECK(is_triplet_1d(M, {5, 5, 0}));
    CHECK(is_triplet_1d(M, {0, 0, 0}));
    CHECK_FALSE(is_triplet_1d(M, {0, 1, 2}));
    CHECK_FALSE(is_triplet_1d(M, {1, 0, 2}));
    CHECK_FALSE(is_triplet_1d(M, {0, 0, 1}));
    // exact, not slack-based: 0 coordinate demands exact equality of the others
    CHECK_FALSE(is_triplet_1d(M, {0, 5, 5 + 1e-13}));
}

TEST_CASE("literal vs symmetrized strong-b checks") {
    auto S2 = SemiTriangleCondition::strong_b(2);
    CHECK(S2.default_mode() == TripletMode::Symmetrized);
    // (3,1,6): c <= 2a+b = 7 holds, but the swapped role c <= 2b+a = 5 fails
    CHECK(is_triplet_1d(S2, {3, 1, 6}, TripletMode::Literal));
    CHECK_FALSE(is_triplet_1d(S2, {3, 1, 6}, TripletMode::Symmetrized));
    CHECK(is_triplet_1d(S2, {1, 2, 4}, TripletMode::Symmetrized));
    // symmetric generators: both modes agree
    auto M = SemiTriangleCondition::metric();
    CHECK(M.default_mode() == TripletMode::Literal);
    CHECK(is_triplet_1d(M, {1, 2, 3}, TripletMode::Symmetrized));
}

TEST_CASE("multidimensional triplet checks") {
    std::vector<SemiTriangleCondition> conds{SemiTriangleCondition::metric(),
                                             SemiTriangleCondition::b_metric(2)};
    TripletND ok{{1, 1}, {2, 2}, {3, 6}};
    CHECK(is_triplet_nd(conds, ok));
    TripletND bad{{1, 1}, {2, 2}, {3.5, 6}};  // first coordinate breaks (M)
    CHECK_FALSE(is_triplet_nd(conds, bad));
    TripletND mixed_zero{{0, 1}, {1, 0}, {1, 1}};  // (0,l,l) patterns per coordinate
    CHECK(is_triplet_nd(conds, mixed_zero));
    TripletND wrong_arity{{1}, {2}, {3}};
    CHECK_THROWS_AS(is_triplet_nd(conds, wrong_arity), ArityError);
}

TEST_CASE("built-in combiner values") {
    const double x[2] = {3, 4};
    CHECK(Combiner::builtin(Builtin::Mean, 2)(x) == 3.5);
    CHECK(Combiner::builtin(Builtin::Sum, 2)(x) == 7.0);
    CHECK(Combiner::builtin(Builtin::Max, 2)(x) == 4.0);
    CHECK(Combiner::builtin(Builtin::Min, 2)(x) == 3.0);
    CHECK(Combiner::builtin(Builtin::SumSq, 2)(x) == 25.0);
    CHECK(Combiner::builtin(Builtin::Euclid, 2)(x) == 5.0);

    auto pbm = Combiner::builtin(Builtin::StepPbm, 2);
    const double p00[2] = {0, 0}, p10[2] = {1, 0}, p01[2] = {0, 1}, pxy[2] = {2, 7};
    CHECK(pbm(p00) == 0.0);
    CHECK(pbm(p10) == 1.0);
    CHECK(pbm(p01) == 3.0);
    CHECK(pbm(pxy) == 2.0);

    auto sb = Combiner::builtin(Builtin::StepBounded, 2);
    const double ones[2] = {1, 1};
    CHECK(sb(p00) == 0.0);
    CHECK(sb(ones) == 2.0);
    CHECK(sb(pxy) == 1.0);
}

TEST_CASE("combiner parsing and guards") {
    CHECK(Combiner::parse("builtin:mean", 3).arity() == 3);
    CHECK(Combiner::parse("expr:x1 + x2", 2).to_text() == "expr:x1 + x2");
    CHECK_THROWS_AS(Combiner::parse("builtin:nope", 2), DomainError);
    CHECK_THROWS_AS(Combiner::parse("mean", 2), DomainError);
    CHECK_THROWS_AS(Combiner::builtin(Builtin::StepPbm, 3), ArityError);
    CHECK_THROWS_AS(Combiner::builtin(Builtin::Mean, 0), ArityError);

    auto f = Combiner::parse("builtin:mean", 2);
    const double wrong[3] = {1, 2, 3};
    CHECK_THROWS_AS(f(wrong), ArityError);
    auto neg = Combiner::parse("expr:x1 - 2", 1);
    const double one[1] = {1};
    CHECK_THROWS_AS(neg(one), EvaluationError);
    auto overflow = Combiner::parse("builtin:exp_sum", 1);
    const double big[1] = {1e6};
    CHECK_THROWS_AS(overflow(big), EvaluationError);
}
