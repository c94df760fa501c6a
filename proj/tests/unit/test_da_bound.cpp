#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "georl/da_bound.hpp"

using namespace georl;

namespace {

Labeling labels(std::initializer_list<bool> v) {
    Labeling l(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (bool b : v) l[i++] = b;
    return l;
}

// Second implementation: explicit loops over points, no Eigen reductions.
double mass_where_differ(const LabelMatrix& H, Eigen::Index a, Eigen::Index b, const Eigen::VectorXd& d) {
    double s = 0;
    for (Eigen::Index x = 0; x < d.size(); ++x)
        if (H(a, x) != H(b, x)) s += d[x];
    return s;
}

double hdh_oracle(const FiniteSetup& s) {
    double sup = 0;
    for (Eigen::Index a = 0; a < s.class_size(); ++a)
        for (Eigen::Index b = 0; b < s.class_size(); ++b)
            sup = std::max(sup, std::abs(mass_where_differ(s.hypotheses, a, b, s.source) -
                                         mass_where_differ(s.hypotheses, a, b, s.target)));
    return 2 * sup;
}

double error_oracle(const FiniteSetup& s, Eigen::Index h, const Eigen::VectorXd& d) {
    double e = 0;
    for (Eigen::Index x = 0; x < d.size(); ++x)
        if (s.hypotheses(h, x) != s.truth[x]) e += d[x];
    return e;
}

double min_slack_oracle(const FiniteSetup& s) {
    double ideal = 2;
    for (Eigen::Index h = 0; h < s.class_size(); ++h)
        ideal = std::min(ideal, error_oracle(s, h, s.source) + error_oracle(s, h, s.target));
    const double d = hdh_oracle(s);
    double worst = 1e9;
    for (Eigen::Index h = 0; h < s.class_size(); ++h)
        worst = std::min(worst, error_oracle(s, h, s.source) + ideal + d / 2 - error_oracle(s, h, s.target));
    return worst;
}

FiniteSetup setup_from(Eigen::VectorXd src, Eigen::VectorXd tgt, std::vector<Labeling> hyps, Labeling truth) {
    FiniteSetup s;
    s.source = std::move(src);
    s.target = std::move(tgt);
    s.hypotheses.resize(static_cast<Eigen::Index>(hyps.size()), s.source.size());
    for (std::size_t i = 0; i < hyps.size(); ++i) s.hypotheses.row(static_cast<Eigen::Index>(i)) = hyps[i].transpose();
    s.truth = std::move(truth);
    return s;
}

}  // namespace

TEST_CASE("disagreement examples") {
    const Eigen::Vector3d w(0.5, 0.3, 0.2);
    const Labeling h = labels({true, false, true});
    CHECK(disagreement(h, h, w) == 0.0);
    CHECK(disagreement(h, !h, w) == 1.0);
    CHECK(disagreement(h, labels({true, true, true}), w) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("disagreement is a pseudo-metric on every labeling of four points") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd d(4);
        for (auto& x : d) x = std::uniform_real_distribution<double>(0, 1)(rng);
        d /= d.sum();
        std::vector<Labeling> all;
        for (int m = 0; m < 16; ++m) all.push_back(labels({bool(m & 1), bool(m & 2), bool(m & 4), bool(m & 8)}));
        for (const auto& a : all) {
            CHECK(disagreement(a, a, d) == 0.0);
            for (const auto& b : all) {
                CHECK(disagreement(a, b, d) == disagreement(b, a, d));
                for (const auto& c : all) CHECK(disagreement(a, c, d) <= disagreement(a, b, d) + disagreement(b, c, d) + 1e-15);
            }
        }
    }
}

TEST_CASE("hdh_distance examples") {
    std::mt19937_64 rng(2);
    FiniteSetup s = random_setup(rng, 6, 16);
    s.target = s.source;
    CHECK(hdh_distance(s) == 0.0);

    FiniteSetup one = random_setup(rng, 6, 16);
    one.hypotheses = one.hypotheses.topRows(1).eval();
    CHECK(hdh_distance(one) == 0.0);

    FiniteSetup big = random_setup(rng, 3, 4);
    big.hypotheses = LabelMatrix::Constant(kMaxHypotheses + 1, big.space_size(), false);
    CHECK_THROWS_AS(hdh_distance(big), ClassTooLarge);
    CHECK_THROWS_AS(verify_bound(big), ClassTooLarge);
}

TEST_CASE("hdh_distance matches the double-loop oracle") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const FiniteSetup s = trial % 2 ? random_setup(rng, 4, 8) : random_setup(rng);
        REQUIRE(s.validate().empty());
        const double d = hdh_distance(s);
        CHECK(d == doctest::Approx(hdh_oracle(s)).epsilon(1e-15));
        CHECK(d >= 0.0);
        CHECK(d <= 2.0);
        const Eigen::MatrixXd m = disagreement_matrix(s.hypotheses, s.source);
        for (Eigen::Index a = 0; a < s.class_size(); ++a)
            for (Eigen::Index b = 0; b < s.class_size(); ++b)
                CHECK(m(a, b) == doctest::Approx(mass_where_differ(s.hypotheses, a, b, s.source)).epsilon(1e-15));
    }
}

TEST_CASE("bound with identical distributions and truth in the class") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        FiniteSetup s = random_setup(rng);
        s.target = s.source;
        s.hypotheses.row(0) = s.truth.transpose();
        const BoundReport r = verify_bound(s);
        CHECK(r.holds);
        CHECK(r.worst_slack >= 0.0);
        CHECK(r.ideal_error == 0.0);
        CHECK(r.hdh == 0.0);
    }
}

TEST_CASE("tight two-point case from the triangle-inequality chain") {
    // Source sits on x0, target on x1. h_a errs only on x1; h_b = f. Every step of the chain
    // eps_T(h_a) <= eps_T(h_b) + eps_T(h_a, h_b) <= ... is an equality, so the slack is exactly 0.
    const FiniteSetup s = setup_from(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1),
                                     {labels({true, false}), labels({true, true})}, labels({true, true}));
    const BoundReport r = verify_bound(s);
    CHECK(r.holds);
    CHECK(r.hdh == 2.0);
    CHECK(r.ideal_error == 0.0);
    CHECK(r.worst_slack == 0.0);
    CHECK(r.worst_hypothesis == 0);

    // Mirrored masses, class {all true, all false}, truth (1, 0):
    // eps_S = (0.25, 0.75), eps_T = (0.75, 0.25), ideal = 1, d = 0, slacks 0.5 and 1.5.
    const FiniteSetup m = setup_from(Eigen::Vector2d(0.75, 0.25), Eigen::Vector2d(0.25, 0.75),
                                     {labels({true, true}), labels({false, false})}, labels({true, false}));
    const BoundReport q = verify_bound(m);
    CHECK(q.hdh == 0.0);
    CHECK(q.ideal_error == 1.0);
    CHECK(q.worst_slack == 0.5);
    CHECK(q.worst_hypothesis == 0);
}

TEST_CASE("the bound holds on seeded random setups") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const FiniteSetup s = random_setup(rng);
        const BoundReport r = verify_bound(s);
        CHECK(r.holds);
        CHECK(r.worst_slack >= 0.0);
        CHECK(r.worst_slack == doctest::Approx(min_slack_oracle(s)).epsilon(1e-14));
    }
}

TEST_CASE("random_setup produces exact dyadic masses") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const FiniteSetup s = random_setup(rng, 6, 64);
        CHECK(s.validate().empty());
        CHECK(s.space_size() >= 2);
        CHECK(s.space_size() <= 6);
        CHECK(s.class_size() >= 1);
        CHECK(s.class_size() <= 64);
        CHECK(s.source.sum() == 1.0);
        CHECK(s.target.sum() == 1.0);
        for (double p : s.source) CHECK(p * 1024 == std::round(p * 1024));
    }
}

TEST_CASE("validate names broken fields") {
    std::mt19937_64 rng(7);
    FiniteSetup s = random_setup(rng);
    s.source[0] += 0.5;
    CHECK_FALSE(s.validate().empty());
    s = random_setup(rng);
    s.truth = Labeling::Constant(s.space_size() + 1, true);
    CHECK_FALSE(s.validate().empty());
}
