#include "mmdeq/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace mmdeq {

Regressor Regressor::ols() {
    Regressor r;
    r.kind_ = Kind::LinearOLS;
    return r;
}

Regressor Regressor::nadaraya_watson(double bandwidth) {
    if (!(bandwidth > 0.0)) {
        throw validation_error("SchemaMismatch", "Nadaraya-Watson bandwidth must be positive");
    }
    Regressor r;
    r.kind_ = Kind::NadarayaWatson;
    r.bandwidth_ = bandwidth;
    return r;
}

Regressor Regressor::knearest(int k) {
    if (k < 1) throw validation_error("SchemaMismatch", "k must be positive");
    Regressor r;
    r.kind_ = Kind::KNearest;
    r.k_ = k;
    return r;
}

void Regressor::fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() != y.rows() || x.rows() == 0) {
        throw validation_error("SchemaMismatch", "regression design and response disagree");
    }
    switch (kind_) {
        case Kind::LinearOLS: {
            Eigen::MatrixXd design(x.rows(), x.cols() + 1);
            design.col(0).setOnes();
            design.rightCols(x.cols()) = x;
            // Complete orthogonal decomposition yields the minimum-norm
            // solution when the design is rank deficient.
            Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
            rank_deficient_ = cod.rank() < design.cols();
            coef_ = cod.solve(y);
            break;
        }
        case Kind::NadarayaWatson:
            xtrain_ = x;
            ytrain_ = y;
            break;
        case Kind::KNearest:
            if (x.rows() < k_) {
                throw validation_error("SchemaMismatch", "KNN needs k <= training size");
            }
            xtrain_ = x;
            ytrain_ = y;
            break;
    }
    fitted_ = true;
}

Eigen::MatrixXd Regressor::predict(const Eigen::MatrixXd& x) const {
    if (!fitted_) throw numeric_error("NotFitted", "predict before fit");
    switch (kind_) {
        case Kind::LinearOLS: {
            Eigen::MatrixXd design(x.rows(), x.cols() + 1);
            design.col(0).setOnes();
            design.rightCols(x.cols()) = x;
            return design * coef_;
        }
        case Kind::NadarayaWatson: {
            const double inv2h2 = 1.0 / (2.0 * bandwidth_ * bandwidth_);
            Eigen::MatrixXd out(x.rows(), ytrain_.cols());
            Eigen::VectorXd logw(xtrain_.rows());
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                for (Eigen::Index j = 0; j < xtrain_.rows(); ++j) {
                    logw[j] = -(x.row(i) - xtrain_.row(j)).squaredNorm() * inv2h2;
                }
                // Shift by the max exponent so an isolated query point falls
                // back to its nearest neighbor instead of 0/0.
                const double shift = logw.maxCoeff();
                Eigen::VectorXd w = (logw.array() - shift).exp();
                out.row(i) = (w.transpose() * ytrain_) / w.sum();
            }
            return out;
        }
        case Kind::KNearest: {
            Eigen::MatrixXd out(x.rows(), ytrain_.cols());
            std::vector<int> idx(static_cast<size_t>(xtrain_.rows()));
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                Eigen::VectorXd dist(xtrain_.rows());
                for (Eigen::Index j = 0; j < xtrain_.rows(); ++j) {
                    dist[j] = (x.row(i) - xtrain_.row(j)).squaredNorm();
                }
                std::iota(idx.begin(), idx.end(), 0);
                std::nth_element(idx.begin(), idx.begin() + (k_ - 1), idx.end(),
                                 [&](int a, int b) {
                                     return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
                                 });
                Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(ytrain_.cols());
                for (int t = 0; t < k_; ++t) acc += ytrain_.row(idx[static_cast<size_t>(t)]);
                out.row(i) = acc / static_cast<double>(k_);
            }
            return out;
        }
    }
    throw numeric_error("NotFitted", "unreachable");
}

nlohmann::json Regressor::summary() const {
    nlohmann::json j;
    switch (kind_) {
        case Kind::LinearOLS: {
            j["kind"] = "linear-ols";
            j["rank_deficient"] = rank_deficient_;
            if (fitted_) {
                std::vector<std::vector<double>> c;
                for (Eigen::Index i = 0; i < coef_.rows(); ++i) {
                    std::vector<double> row;
                    for (Eigen::Index k = 0; k < coef_.cols(); ++k) row.push_back(coef_(i, k));
                    c.push_back(row);
                }
                j["coefficients"] = c;
            }
            break;
        }
        case Kind::NadarayaWatson:
            j["kind"] = "nadaraya-watson";
            j["bandwidth"] = bandwidth_;
            break;
        case Kind::KNearest:
            j["kind"] = "k-nearest";
            j["k"] = k_;
            break;
    }
    return j;
}

Propensity Propensity::known_constant(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw validation_error("PropensityOutOfRange", "known propensity must lie in (0,1)");
    }
    Propensity m;
    m.kind_ = Kind::KnownConstant;
    m.p_ = p;
    m.fitted_ = true;
    return m;
}

Propensity Propensity::logistic() {
    Propensity m;
    m.kind_ = Kind::Logistic;
    return m;
}

void Propensity::set_floor(double f) {
    if (!(f > 0.0 && f < 0.5)) {
        throw validation_error("SchemaMismatch", "propensity floor must lie in (0, 0.5)");
    }
    floor_ = f;
}

void Propensity::fit(const Eigen::MatrixXd& x, const Eigen::VectorXi& a) {
    if (kind_ == Kind::KnownConstant) return;
    // Logistic regression by IRLS with an intercept.
    Eigen::MatrixXd design(x.rows(), x.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(x.cols()) = x;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.cols());
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd eta = design * beta;
        Eigen::VectorXd mu = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
        Eigen::VectorXd wgt = (mu.array() * (1.0 - mu.array())).cwiseMax(1e-10).matrix();
        Eigen::VectorXd resid = a.cast<double>() - mu;
        Eigen::MatrixXd xtw = design.transpose() * wgt.asDiagonal();
        Eigen::VectorXd step =
            (xtw * design + 1e-10 * Eigen::MatrixXd::Identity(design.cols(), design.cols()))
                .ldlt()
                .solve(design.transpose() * resid);
        beta += step;
        if (step.norm() < 1e-10) break;
    }
    coef_ = beta;
    fitted_ = true;
}

Eigen::VectorXd Propensity::prob1(const Eigen::MatrixXd& x) const {
    if (!fitted_) throw numeric_error("NotFitted", "propensity predict before fit");
    Eigen::VectorXd p;
    if (kind_ == Kind::KnownConstant) {
        p = Eigen::VectorXd::Constant(x.rows(), p_);
    } else {
        Eigen::MatrixXd design(x.rows(), x.cols() + 1);
        design.col(0).setOnes();
        design.rightCols(x.cols()) = x;
        Eigen::VectorXd eta = design * coef_;
        p = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    }
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0 && p[i] < 1.0) && kind_ == Kind::KnownConstant) {
            throw validation_error("PropensityOutOfRange", "propensity outside (0,1)");
        }
        p[i] = std::clamp(p[i], floor_, 1.0 - floor_);
    }
    return p;
}

nlohmann::json Propensity::summary() const {
    nlohmann::json j;
    j["floor"] = floor_;
    if (kind_ == Kind::KnownConstant) {
        j["kind"] = "known-constant";
        j["p"] = p_;
    } else {
        j["kind"] = "logistic";
        if (fitted_ && coef_.size() > 0) {
            j["coefficients"] = std::vector<double>(coef_.data(), coef_.data() + coef_.size());
        }
    }
    return j;
}

}  // namespace mmdeq
