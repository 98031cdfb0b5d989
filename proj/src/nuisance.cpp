#include "mmdeq/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mmdeq {

std::string to_string(Example e) {
    switch (e) {
        case Example::Ex1_CATE: return "ex1";
        case Example::Ex2_TwoPop: return "ex2";
        case Example::Ex3_CondMean: return "ex3";
        case Example::Ex4_VarImportance: return "ex4";
    }
    return "?";
}

Example example_from_string(const std::string& s) {
    if (s == "ex1") return Example::Ex1_CATE;
    if (s == "ex2") return Example::Ex2_TwoPop;
    if (s == "ex3") return Example::Ex3_CondMean;
    if (s == "ex4") return Example::Ex4_VarImportance;
    throw validation_error("SchemaMismatch", "unknown example '" + s + "'");
}

void ExampleSpec::validate(const Dataset& data) const {
    if (!(clip_b > 0.0)) throw validation_error("SchemaMismatch", "clip_b must be positive");
    switch (example) {
        case Example::Ex1_CATE:
        case Example::Ex2_TwoPop:
            if (!data.has_treatment()) {
                throw validation_error("MissingTreatmentColumn",
                                       to_string(example) + " requires an A column");
            }
            break;
        case Example::Ex3_CondMean:
            break;
        case Example::Ex4_VarImportance:
            if (data.w_dim() < 2) {
                throw validation_error("SchemaMismatch", "ex4 requires at least 2 covariates");
            }
            if (ex4_coord < 0 || ex4_coord >= data.w_dim()) {
                throw validation_error("SchemaMismatch", "ex4 coordinate index out of range");
            }
            if (!(ex4_p > 0.0 && ex4_p < 1.0)) {
                throw validation_error("PropensityOutOfRange", "ex4 p must lie in (0,1)");
            }
            break;
    }
}

namespace {

Eigen::MatrixXd drop_column(const Eigen::MatrixXd& x, int k) {
    Eigen::MatrixXd out(x.rows(), x.cols() - 1);
    if (k > 0) out.leftCols(k) = x.leftCols(k);
    if (k < x.cols() - 1) out.rightCols(x.cols() - 1 - k) = x.rightCols(x.cols() - 1 - k);
    return out;
}

Eigen::MatrixXd clip(const Eigen::MatrixXd& m, double b) {
    return m.cwiseMax(-b).cwiseMin(b);
}

}  // namespace

nlohmann::json FittedNuisance::summary() const {
    nlohmann::json j;
    j["example"] = to_string(example);
    j["clip_b"] = clip_b;
    switch (example) {
        case Example::Ex1_CATE:
        case Example::Ex2_TwoPop:
            j["outcome_arm1"] = outcome1.summary();
            j["outcome_arm0"] = outcome0.summary();
            j["propensity"] = propensity.summary();
            break;
        case Example::Ex3_CondMean:
            j["outcome"] = outcome1.summary();
            break;
        case Example::Ex4_VarImportance:
            j["outcome_full"] = outcome1.summary();
            j["outcome_reduced"] = outcome0.summary();
            j["coord"] = ex4_coord;
            j["p"] = ex4_p;
            break;
    }
    return j;
}

FittedNuisance fit_nuisance(const ExampleSpec& spec, const Dataset& data) {
    spec.validate(data);
    FittedNuisance fit;
    fit.example = spec.example;
    fit.outcome1 = spec.outcome_model;
    fit.outcome0 = spec.outcome_model;
    fit.propensity = spec.propensity_model;
    fit.clip_b = spec.clip_b;
    fit.ex4_coord = spec.ex4_coord;
    fit.ex4_p = spec.ex4_p;

    const Eigen::MatrixXd w = data.w_matrix();
    const Eigen::MatrixXd y = data.y_matrix();

    switch (spec.example) {
        case Example::Ex1_CATE:
        case Example::Ex2_TwoPop: {
            const Eigen::VectorXi a = data.a_vector();
            std::vector<int> arm1, arm0;
            for (int i = 0; i < data.n(); ++i) (a[i] == 1 ? arm1 : arm0).push_back(i);
            if (arm1.empty() || arm0.empty()) {
                throw validation_error("SchemaMismatch", "one treatment arm is empty");
            }
            auto rows = [&](const std::vector<int>& idx, const Eigen::MatrixXd& m) {
                Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
                for (size_t t = 0; t < idx.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = m.row(idx[t]);
                return out;
            };
            fit.outcome1.fit(rows(arm1, w), rows(arm1, y));
            fit.outcome0.fit(rows(arm0, w), rows(arm0, y));
            fit.propensity.fit(w, a);
            break;
        }
        case Example::Ex3_CondMean:
            fit.outcome1.fit(w, y);
            break;
        case Example::Ex4_VarImportance:
            fit.outcome1.fit(w, y);
            fit.outcome0.fit(drop_column(w, spec.ex4_coord), y);
            break;
    }
    return fit;
}

FunctionalEvaluations evaluate_with(const FittedNuisance& fit, const Dataset& data,
                                    RngSeed seed) {
    const int n = data.n();
    const int d = data.y_dim();
    const Eigen::MatrixXd w = data.w_matrix();
    const Eigen::MatrixXd y = data.y_matrix();

    FunctionalEvaluations fe;
    fe.bound_b = fit.clip_b;
    fe.s = Eigen::MatrixXd::Zero(n, d);
    fe.ds = Eigen::MatrixXd::Zero(n, d);

    switch (fit.example) {
        case Example::Ex1_CATE: {
            const Eigen::VectorXi a = data.a_vector();
            const Eigen::MatrixXd mu1 = fit.outcome1.predict(w);
            const Eigen::MatrixXd mu0 = fit.outcome0.predict(w);
            const Eigen::VectorXd pi1 = fit.propensity.prob1(w);
            fe.r = clip(mu1 - mu0, fit.clip_b);
            fe.dr.resize(n, d);
            for (int i = 0; i < n; ++i) {
                const double pa = a[i] == 1 ? pi1[i] : 1.0 - pi1[i];
                const auto& mua = a[i] == 1 ? mu1 : mu0;
                fe.dr.row(i) = (2.0 * a[i] - 1.0) / pa * (y.row(i) - mua.row(i));
            }
            break;
        }
        case Example::Ex2_TwoPop: {
            const Eigen::VectorXi a = data.a_vector();
            const Eigen::MatrixXd mu1 = fit.outcome1.predict(w);
            const Eigen::MatrixXd mu0 = fit.outcome0.predict(w);
            const Eigen::VectorXd pi1 = fit.propensity.prob1(w);
            fe.r = clip(mu1, fit.clip_b);
            fe.s = clip(mu0, fit.clip_b);
            fe.dr.resize(n, d);
            fe.ds.resize(n, d);
            for (int i = 0; i < n; ++i) {
                fe.dr.row(i) = a[i] / pi1[i] * (y.row(i) - mu1.row(i));
                fe.ds.row(i) = (1.0 - a[i]) / (1.0 - pi1[i]) * (y.row(i) - mu0.row(i));
            }
            break;
        }
        case Example::Ex3_CondMean: {
            const Eigen::MatrixXd mu = fit.outcome1.predict(w);
            fe.r = clip(mu, fit.clip_b);
            fe.dr = y - mu;
            break;
        }
        case Example::Ex4_VarImportance: {
            // The artificial A is external randomization: part of the test
            // statistic, not the data.
            RngStream rng(seed);
            const Eigen::MatrixXd mu_full = fit.outcome1.predict(w);
            const Eigen::MatrixXd mu_red = fit.outcome0.predict(drop_column(w, fit.ex4_coord));
            fe.r = clip(mu_full, fit.clip_b);
            fe.s = clip(mu_red, fit.clip_b);
            fe.dr = y - fe.r;
            fe.ds.resize(n, d);
            for (int i = 0; i < n; ++i) {
                const double ai = rng.bernoulli(fit.ex4_p);
                fe.ds.row(i) = ai / fit.ex4_p * (y.row(i) - fe.s.row(i));
            }
            break;
        }
    }
    fe.validate();
    return fe;
}

FunctionalEvaluations evaluate_example(const ExampleSpec& spec, const Dataset& data,
                                       RngSeed seed) {
    return evaluate_with(fit_nuisance(spec, data), data, seed);
}

SplitEvaluations split_fit(const ExampleSpec& spec, const Dataset& data, RngSeed seed) {
    const int n = data.n();
    if (n < 4) throw validation_error("TooFewObservations", "two-fold split needs n >= 4");
    RngStream rng(seed.derived(0x5F17u));
    std::vector<int> perm = rng.permutation(n);
    SplitEvaluations out;
    out.fold1.assign(perm.begin(), perm.begin() + n / 2);
    out.fold2.assign(perm.begin() + n / 2, perm.end());
    std::sort(out.fold1.begin(), out.fold1.end());
    std::sort(out.fold2.begin(), out.fold2.end());
    out.fit = fit_nuisance(spec, data.subset(out.fold1));
    out.evals = evaluate_with(out.fit, data.subset(out.fold2), seed.derived(0xA4u));
    return out;
}

Eigen::VectorXd remainder_ex1(const Ex1Discrete& d) {
    const auto m = d.pw.size();
    if (d.pi0.size() != m || d.pi_hat.size() != m || d.mu0.rows() != m || d.mu_hat.rows() != m ||
        d.mu0.cols() != 2 || d.mu_hat.cols() != 2) {
        throw numeric_error("DimensionMismatch", "remainder_ex1 inputs disagree");
    }
    Eigen::VectorXd rem(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int a = 0; a <= 1; ++a) {
            const double pi0a = a == 1 ? d.pi0[i] : 1.0 - d.pi0[i];
            const double piha = a == 1 ? d.pi_hat[i] : 1.0 - d.pi_hat[i];
            const double sign = a == 0 ? 1.0 : -1.0;
            acc += sign * (1.0 - pi0a / piha) * (d.mu_hat(i, a) - d.mu0(i, a));
        }
        rem[i] = acc;
    }
    return rem;
}

}  // namespace mmdeq
