#pragma once

#include <Eigen/Core>

#include <json.hpp>

#include "mmdeq/kernel.hpp"
#include "mmdeq/regression.hpp"
#include "mmdeq/rng.hpp"
#include "mmdeq/types.hpp"

namespace mmdeq {

enum class Example { Ex1_CATE, Ex2_TwoPop, Ex3_CondMean, Ex4_VarImportance };

std::string to_string(Example e);
Example example_from_string(const std::string& s);

struct ExampleSpec {
    Example example = Example::Ex3_CondMean;
    Regressor outcome_model = Regressor::ols();
    Propensity propensity_model = Propensity::known_constant(0.5);
    double clip_b = 1.0;
    int ex4_coord = 0;      // index into W, Example 4 only
    double ex4_p = 0.5;     // success probability of the artificial A

    void validate(const Dataset& data) const;
};

// Nuisance functions fitted on one dataset, applicable to another.
struct FittedNuisance {
    Example example;
    Regressor outcome1;      // arm A=1 (Ex1/Ex2), full-W regression (Ex3/Ex4)
    Regressor outcome0;      // arm A=0 (Ex1/Ex2), W(-k) regression (Ex4)
    Propensity propensity;
    double clip_b = 1.0;
    int ex4_coord = 0;
    double ex4_p = 0.5;

    nlohmann::json summary() const;
};

FittedNuisance fit_nuisance(const ExampleSpec& spec, const Dataset& data);

// Produces r, s, dr, ds at the given observations from an already-fitted
// bundle. Example 4 draws its artificial A from `seed`.
FunctionalEvaluations evaluate_with(const FittedNuisance& fit, const Dataset& data,
                                    RngSeed seed);

// Fit and evaluate on the same sample.
FunctionalEvaluations evaluate_example(const ExampleSpec& spec, const Dataset& data,
                                       RngSeed seed);

// Two-fold split: nuisances fitted on a random half, evaluations returned for
// the other half only.
struct SplitEvaluations {
    FunctionalEvaluations evals;       // fold-2 observations
    std::vector<int> fold1, fold2;     // original indices
    FittedNuisance fit;
};

SplitEvaluations split_fit(const ExampleSpec& spec, const Dataset& data, RngSeed seed);

// Discrete Example-1 setting with enumerable covariate support, used to
// evaluate the double-robust remainder exactly.
struct Ex1Discrete {
    Eigen::VectorXd pw;       // P0(W = w_m)
    Eigen::VectorXd pi0;      // P0(A=1 | W = w_m)
    Eigen::MatrixXd mu0;      // m x 2, columns a=0 and a=1
    Eigen::MatrixXd mu_hat;   // fitted outcome regression at the atoms
    Eigen::VectorXd pi_hat;   // fitted propensity at the atoms
};

// Rem_P^R at each support point:
//   sum_{a in {0,1}} (-1)^a [1 - pi0(a|w)/pi_hat(a|w)] [mu_hat(a,w) - mu0(a,w)]
Eigen::VectorXd remainder_ex1(const Ex1Discrete& d);

}  // namespace mmdeq
