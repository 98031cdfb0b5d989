#include <doctest.h>

#include <cmath>

#include "mmdeq/nuisance.hpp"
#include "mmdeq/rng.hpp"

using namespace mmdeq;

namespace {

Dataset make_data(int n, RngSeed seed, bool with_a, int y_dim = 1) {
    RngStream rng(seed);
    std::vector<Observation> obs(static_cast<size_t>(n));
    for (auto& o : obs) {
        o.w.resize(2);
        o.w[0] = rng.normal();
        o.w[1] = rng.normal();
        if (with_a) o.a = rng.bernoulli(0.5);
        o.y.resize(y_dim);
        for (int k = 0; k < y_dim; ++k) {
            o.y[k] = 0.3 * o.w[0] - 0.2 * o.w[1] + 0.1 * rng.normal();
        }
    }
    Schema sc;
    sc.w_cols = {"w1", "w2"};
    if (with_a) sc.a_col = "a";
    for (int k = 0; k < y_dim; ++k) sc.y_cols.push_back("y" + std::to_string(k + 1));
    return Dataset(std::move(obs), sc);
}

}  // namespace

TEST_SUITE("nuisance") {

TEST_CASE("example 3 with an all-zero outcome is identically zero") {
    RngStream rng(RngSeed{60, 0});
    std::vector<Observation> obs(10);
    for (auto& o : obs) {
        o.w.resize(2);
        o.w[0] = rng.normal();
        o.w[1] = rng.normal();
        o.y = Eigen::VectorXd::Zero(1);
    }
    Schema sc;
    sc.w_cols = {"w1", "w2"};
    sc.y_cols = {"y"};
    const Dataset data(std::move(obs), sc);

    ExampleSpec spec;
    spec.example = Example::Ex3_CondMean;
    spec.outcome_model = Regressor::ols();
    const FunctionalEvaluations fe = evaluate_example(spec, data, RngSeed{1, 0});
    CHECK(fe.r.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(fe.s.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fe.dr.cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(fe.ds.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("example 3 gradient is the regression residual") {
    const Dataset data = make_data(40, RngSeed{61, 0}, false);
    ExampleSpec spec;
    spec.example = Example::Ex3_CondMean;
    spec.outcome_model = Regressor::ols();
    const FittedNuisance fit = fit_nuisance(spec, data);
    const FunctionalEvaluations fe = evaluate_with(fit, data, RngSeed{1, 0});
    const Eigen::MatrixXd mu = fit.outcome1.predict(data.w_matrix());
    CHECK((fe.dr - (data.y_matrix() - mu)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((fe.r - mu.cwiseMax(-1.0).cwiseMin(1.0)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("example 1 with known propensity 0.5 doubles the residual") {
    const Dataset data = make_data(50, RngSeed{62, 0}, true);
    ExampleSpec spec;
    spec.example = Example::Ex1_CATE;
    spec.outcome_model = Regressor::ols();
    spec.propensity_model = Propensity::known_constant(0.5);
    const FittedNuisance fit = fit_nuisance(spec, data);
    const FunctionalEvaluations fe = evaluate_with(fit, data, RngSeed{1, 0});
    const Eigen::MatrixXd mu1 = fit.outcome1.predict(data.w_matrix());
    const Eigen::MatrixXd mu0 = fit.outcome0.predict(data.w_matrix());
    const Eigen::VectorXi a = data.a_vector();
    for (int i = 0; i < data.n(); ++i) {
        const double resid =
            data[i].y[0] - (a[i] == 1 ? mu1(i, 0) : mu0(i, 0));
        const double expect = (a[i] == 1 ? 2.0 : -2.0) * resid;
        CHECK(fe.dr(i, 0) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(fe.s.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fe.ds.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("example 2 gradients sum to twice the own-arm residual at pi = 0.5") {
    const Dataset data = make_data(50, RngSeed{63, 0}, true);
    ExampleSpec spec;
    spec.example = Example::Ex2_TwoPop;
    spec.outcome_model = Regressor::ols();
    spec.propensity_model = Propensity::known_constant(0.5);
    const FittedNuisance fit = fit_nuisance(spec, data);
    const FunctionalEvaluations fe = evaluate_with(fit, data, RngSeed{1, 0});
    const Eigen::MatrixXd mu1 = fit.outcome1.predict(data.w_matrix());
    const Eigen::MatrixXd mu0 = fit.outcome0.predict(data.w_matrix());
    const Eigen::VectorXi a = data.a_vector();
    for (int i = 0; i < data.n(); ++i) {
        const double own = a[i] == 1 ? mu1(i, 0) : mu0(i, 0);
        CHECK(fe.dr(i, 0) + fe.ds(i, 0) ==
              doctest::Approx(2.0 * (data[i].y[0] - own)).epsilon(1e-12));
    }
}

TEST_CASE("example 4 uses its own Bernoulli labels deterministically") {
    const Dataset data = make_data(40, RngSeed{64, 0}, false);
    ExampleSpec spec;
    spec.example = Example::Ex4_VarImportance;
    spec.outcome_model = Regressor::ols();
    spec.ex4_coord = 1;
    spec.ex4_p = 0.5;
    const FunctionalEvaluations a = evaluate_example(spec, data, RngSeed{9, 0});
    const FunctionalEvaluations b = evaluate_example(spec, data, RngSeed{9, 0});
    CHECK((a.ds - b.ds).cwiseAbs().maxCoeff() == 0.0);
    // ds is either 0 (label 0) or (y - s)/p (label 1).
    const FittedNuisance fit = fit_nuisance(spec, data);
    const FunctionalEvaluations fe = evaluate_with(fit, data, RngSeed{9, 0});
    int zeros = 0;
    for (int i = 0; i < data.n(); ++i) {
        const double scaled = (data[i].y[0] - fe.s(i, 0)) / spec.ex4_p;
        const bool is_zero = fe.ds(i, 0) == 0.0;
        const bool is_scaled = fe.ds(i, 0) == doctest::Approx(scaled).epsilon(1e-12);
        CHECK((is_zero || is_scaled));
        zeros += is_zero;
    }
    CHECK(zeros > 0);
    CHECK(zeros < data.n());
    // dr is the full-regression residual against the clipped prediction.
    CHECK((fe.dr - (data.y_matrix() - fe.r)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("spec validation catches incompatible datasets") {
    const Dataset no_a = make_data(10, RngSeed{65, 0}, false);
    ExampleSpec ex1;
    ex1.example = Example::Ex1_CATE;
    CHECK_THROWS_WITH_AS(ex1.validate(no_a), doctest::Contains("MissingTreatmentColumn"),
                         Error);
    ExampleSpec ex4;
    ex4.example = Example::Ex4_VarImportance;
    ex4.ex4_coord = 7;
    CHECK_THROWS_AS(ex4.validate(no_a), Error);
    ex4.ex4_coord = 0;
    ex4.ex4_p = 1.5;
    CHECK_THROWS_AS(ex4.validate(no_a), Error);
}

TEST_CASE("clipping keeps r and s inside the declared range") {
    RngStream rng(RngSeed{66, 0});
    std::vector<Observation> obs(30);
    for (auto& o : obs) {
        o.w.resize(1);
        o.w[0] = rng.normal();
        o.y.resize(1);
        o.y[0] = 10.0 * o.w[0];   // forces |mu| > clip_b
    }
    Schema sc;
    sc.w_cols = {"w1"};
    sc.y_cols = {"y"};
    const Dataset data(std::move(obs), sc);
    ExampleSpec spec;
    spec.example = Example::Ex3_CondMean;
    spec.outcome_model = Regressor::ols();
    spec.clip_b = 0.7;
    const FunctionalEvaluations fe = evaluate_example(spec, data, RngSeed{1, 0});
    CHECK(fe.r.cwiseAbs().maxCoeff() <= 0.7 + 1e-12);
    CHECK(fe.bound_b == doctest::Approx(0.7));
}

TEST_CASE("two-fold split halves the data deterministically") {
    const Dataset four = make_data(4, RngSeed{67, 0}, false);
    ExampleSpec spec;
    spec.example = Example::Ex3_CondMean;
    spec.outcome_model = Regressor::knearest(1);
    const SplitEvaluations se = split_fit(spec, four, RngSeed{3, 0});
    CHECK(se.evals.n() == 2);
    CHECK(se.fold1.size() == 2);
    CHECK(se.fold2.size() == 2);

    const Dataset data = make_data(30, RngSeed{68, 0}, false);
    const SplitEvaluations a = split_fit(spec, data, RngSeed{4, 0});
    const SplitEvaluations b = split_fit(spec, data, RngSeed{4, 0});
    CHECK(a.fold1 == b.fold1);
    CHECK((a.evals.r - b.evals.r).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(split_fit(spec, make_data(3, RngSeed{1, 1}, false), RngSeed{1, 0}), Error);
}

TEST_CASE("fold-2 outcomes never leak into the split fit") {
    const Dataset data = make_data(24, RngSeed{69, 0}, false);
    ExampleSpec spec;
    spec.example = Example::Ex3_CondMean;
    spec.outcome_model = Regressor::nadaraya_watson(0.8);
    const RngSeed seed{5, 0};
    const SplitEvaluations base = split_fit(spec, data, seed);

    // Permute outcomes among fold-2 rows only; fold-1 fits are untouched, and
    // fold-2 r (a function of W alone) must not move.
    std::vector<Observation> obs(data.observations());
    const auto& f2 = base.fold2;
    for (size_t t = 0; t + 1 < f2.size(); t += 2) {
        std::swap(obs[static_cast<size_t>(f2[t])].y, obs[static_cast<size_t>(f2[t + 1])].y);
    }
    const Dataset permuted(obs, data.schema());
    const SplitEvaluations perm = split_fit(spec, permuted, seed);
    CHECK(perm.fold1 == base.fold1);
    CHECK((perm.evals.r - base.evals.r).cwiseAbs().maxCoeff() == 0.0);
    CHECK((perm.evals.s - base.evals.s).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("example-1 remainder is doubly robust") {
    RngStream rng(RngSeed{70, 0});
    const int m = 12;
    Ex1Discrete d;
    d.pw = Eigen::VectorXd::Constant(m, 1.0 / m);
    d.pi0.resize(m);
    d.mu0.resize(m, 2);
    d.mu_hat.resize(m, 2);
    d.pi_hat.resize(m);
    for (int i = 0; i < m; ++i) {
        d.pi0[i] = 0.2 + 0.6 * rng.uniform();
        d.mu0(i, 0) = rng.normal();
        d.mu0(i, 1) = rng.normal();
    }

    SUBCASE("correct propensity, arbitrary outcome model") {
        d.pi_hat = d.pi0;
        for (int rep = 0; rep < 100; ++rep) {
            for (int i = 0; i < m; ++i) {
                d.mu_hat(i, 0) = rng.normal();
                d.mu_hat(i, 1) = rng.normal();
            }
            CHECK(remainder_ex1(d).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
    SUBCASE("correct outcome model, arbitrary propensity") {
        d.mu_hat = d.mu0;
        for (int i = 0; i < m; ++i) d.pi_hat[i] = 0.1 + 0.8 * rng.uniform();
        CHECK(remainder_ex1(d).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("both misspecified is generally nonzero") {
        for (int i = 0; i < m; ++i) {
            d.pi_hat[i] = 0.1 + 0.8 * rng.uniform();
            d.mu_hat(i, 0) = rng.normal();
            d.mu_hat(i, 1) = rng.normal();
        }
        CHECK(remainder_ex1(d).cwiseAbs().maxCoeff() > 1e-6);
    }
}

TEST_CASE("fitted-model summaries are serializable") {
    const Dataset data = make_data(30, RngSeed{71, 0}, true);
    ExampleSpec spec;
    spec.example = Example::Ex1_CATE;
    spec.outcome_model = Regressor::nadaraya_watson(1.0);
    const FittedNuisance fit = fit_nuisance(spec, data);
    const nlohmann::json j = fit.summary();
    CHECK(j.contains("outcome_arm1"));
    CHECK(j.contains("propensity"));
    CHECK(j["example"] == "ex1");
}

}  // TEST_SUITE
