#pragma once

#include <Eigen/Core>

#include <json.hpp>

#include "mmdeq/types.hpp"

namespace mmdeq {

// Small deterministic regressors standing in for an ensemble learner.
// Multi-output: y may have several columns, predictions match.
class Regressor {
public:
    enum class Kind { LinearOLS, NadarayaWatson, KNearest };

    static Regressor ols();
    static Regressor nadaraya_watson(double bandwidth);
    static Regressor knearest(int k);

    void fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x) const;

    Kind kind() const { return kind_; }
    bool fitted() const { return fitted_; }
    bool rank_deficient() const { return rank_deficient_; }
    nlohmann::json summary() const;

private:
    Kind kind_ = Kind::LinearOLS;
    double bandwidth_ = 1.0;
    int k_ = 5;
    bool fitted_ = false;
    bool rank_deficient_ = false;

    Eigen::MatrixXd coef_;    // (q+1) x d, intercept first (OLS)
    Eigen::MatrixXd xtrain_;  // NW / KNN
    Eigen::MatrixXd ytrain_;
};

// Propensity P(A=1 | W). Emitted probabilities are clamped to
// [floor, 1-floor] to keep positivity.
class Propensity {
public:
    enum class Kind { KnownConstant, Logistic };

    static Propensity known_constant(double p);
    static Propensity logistic();

    void fit(const Eigen::MatrixXd& x, const Eigen::VectorXi& a);
    Eigen::VectorXd prob1(const Eigen::MatrixXd& x) const;

    Kind kind() const { return kind_; }
    double floor() const { return floor_; }
    void set_floor(double f);
    nlohmann::json summary() const;

private:
    Kind kind_ = Kind::KnownConstant;
    double p_ = 0.5;
    double floor_ = 0.01;
    Eigen::VectorXd coef_;
    bool fitted_ = false;
};

}  // namespace mmdeq
