#include <doctest.h>

#include <cmath>

#include "mmdeq/regression.hpp"
#include "mmdeq/rng.hpp"

using namespace mmdeq;

TEST_SUITE("regression") {

TEST_CASE("OLS interpolates an exactly linear response") {
    RngStream rng(RngSeed{50, 0});
    Eigen::MatrixXd x(30, 3);
    Eigen::MatrixXd y(30, 1);
    for (int i = 0; i < 30; ++i) {
        for (int k = 0; k < 3; ++k) x(i, k) = rng.normal();
        y(i, 0) = 1.5 - 2.0 * x(i, 0) + 0.5 * x(i, 1) + 3.0 * x(i, 2);
    }
    Regressor m = Regressor::ols();
    m.fit(x, y);
    CHECK((m.predict(x) - y).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK_FALSE(m.rank_deficient());
}

TEST_CASE("constant response gives constant predictions for every model") {
    RngStream rng(RngSeed{51, 0});
    Eigen::MatrixXd x(20, 2);
    for (int i = 0; i < 20; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
    }
    const Eigen::MatrixXd y = Eigen::MatrixXd::Constant(20, 1, 0.42);
    for (Regressor m : {Regressor::ols(), Regressor::nadaraya_watson(0.7),
                        Regressor::knearest(5)}) {
        m.fit(x, y);
        CHECK((m.predict(x).array() - 0.42).abs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("rank-deficient design falls back to minimum norm and flags") {
    Eigen::MatrixXd x(6, 2);
    x.col(0) << 1, 2, 3, 4, 5, 6;
    x.col(1) = 2.0 * x.col(0);   // collinear
    Eigen::MatrixXd y = x.col(0);
    Regressor m = Regressor::ols();
    m.fit(x, y);
    CHECK(m.rank_deficient());
    CHECK((m.predict(x) - y).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("Nadaraya-Watson tends to the grand mean for huge bandwidth") {
    RngStream rng(RngSeed{52, 0});
    Eigen::MatrixXd x(25, 1), y(25, 1);
    for (int i = 0; i < 25; ++i) {
        x(i, 0) = rng.uniform();
        y(i, 0) = rng.uniform();
    }
    Regressor m = Regressor::nadaraya_watson(1e6);
    m.fit(x, y);
    CHECK((m.predict(x).array() - y.mean()).abs().maxCoeff() <= 1e-6);
}

TEST_CASE("Nadaraya-Watson is sane far from the training points") {
    Eigen::MatrixXd x(3, 1), y(3, 1), q(1, 1);
    x << 0.0, 1.0, 2.0;
    y << 5.0, 6.0, 7.0;
    q << 100.0;
    Regressor m = Regressor::nadaraya_watson(0.5);
    m.fit(x, y);
    const double p = m.predict(q)(0, 0);
    CHECK(std::isfinite(p));
    CHECK(p == doctest::Approx(7.0));   // nearest neighbor dominates
}

TEST_CASE("k-nearest averages the k closest points") {
    Eigen::MatrixXd x(4, 1), y(4, 1);
    x << 0.0, 1.0, 10.0, 11.0;
    y << 2.0, 4.0, 20.0, 40.0;
    Regressor m1 = Regressor::knearest(1);
    m1.fit(x, y);
    Eigen::MatrixXd q(1, 1);
    q << 0.2;
    CHECK(m1.predict(q)(0, 0) == doctest::Approx(2.0));
    Regressor m2 = Regressor::knearest(2);
    m2.fit(x, y);
    q << 10.4;
    CHECK(m2.predict(q)(0, 0) == doctest::Approx(30.0));
    Regressor mall = Regressor::knearest(4);
    mall.fit(x, y);
    CHECK(mall.predict(q)(0, 0) == doctest::Approx(y.mean()));
}

TEST_CASE("multi-output regression keeps columns independent") {
    RngStream rng(RngSeed{53, 0});
    Eigen::MatrixXd x(15, 2), y(15, 3);
    for (int i = 0; i < 15; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
        y(i, 0) = x(i, 0);
        y(i, 1) = -x(i, 1);
        y(i, 2) = 2.0;
    }
    Regressor m = Regressor::ols();
    m.fit(x, y);
    const Eigen::MatrixXd p = m.predict(x);
    CHECK((p - y).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("predict before fit throws, invalid constructors throw") {
    Regressor m = Regressor::ols();
    CHECK_THROWS_AS(m.predict(Eigen::MatrixXd::Zero(2, 2)), Error);
    CHECK_THROWS_AS(Regressor::nadaraya_watson(0.0), Error);
    CHECK_THROWS_AS(Regressor::knearest(0), Error);
    Regressor k = Regressor::knearest(10);
    CHECK_THROWS_AS(k.fit(Eigen::MatrixXd::Zero(3, 1), Eigen::MatrixXd::Zero(3, 1)), Error);
}

TEST_CASE("known-constant propensity and the positivity floor") {
    const Propensity p = Propensity::known_constant(0.5);
    const Eigen::VectorXd probs = p.prob1(Eigen::MatrixXd::Zero(4, 2));
    CHECK((probs.array() - 0.5).abs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(Propensity::known_constant(0.0), Error);
    CHECK_THROWS_AS(Propensity::known_constant(1.0), Error);

    Propensity low = Propensity::known_constant(0.001);
    const Eigen::VectorXd floored = low.prob1(Eigen::MatrixXd::Zero(2, 1));
    CHECK(floored.minCoeff() == doctest::Approx(0.01));   // default floor
    low.set_floor(0.05);
    CHECK(low.prob1(Eigen::MatrixXd::Zero(2, 1)).minCoeff() == doctest::Approx(0.05));
    CHECK_THROWS_AS(low.set_floor(0.6), Error);
}

TEST_CASE("logistic propensity recovers a clean signal") {
    RngStream rng(RngSeed{54, 0});
    const int n = 2000;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXi a(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        const double pr = 1.0 / (1.0 + std::exp(-(0.3 + 1.2 * x(i, 0))));
        a[i] = rng.bernoulli(pr);
    }
    Propensity m = Propensity::logistic();
    m.fit(x, a);
    Eigen::MatrixXd q(2, 1);
    q << -3.0, 3.0;
    const Eigen::VectorXd p = m.prob1(q);
    CHECK(p[0] < 0.2);
    CHECK(p[1] > 0.8);
    CHECK(p.minCoeff() >= 0.01);
    CHECK(p.maxCoeff() <= 0.99);
    // Summaries carry the fitted state.
    CHECK(m.summary().contains("coefficients"));
}

}  // TEST_SUITE
