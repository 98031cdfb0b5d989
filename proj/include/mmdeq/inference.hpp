#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "mmdeq/kernel.hpp"
#include "mmdeq/types.hpp"

namespace mmdeq {

struct EigenSpectrum {
    std::vector<double> lambda_hat;   // nu_k / n, positive, descending
    int kept_count = 0;
    int dropped_negative_count = 0;
};

struct TestResult {
    double psi_n = 0.0;
    double n_psi_n = 0.0;
    double cutoff = 0.0;
    std::optional<double> p_value;
    bool reject = false;
    Calibration method = Calibration::GramEigen;
    double alpha = 0.05;
    double second_moment = 0.0;
    std::optional<EigenSpectrum> spectrum;
    std::optional<double> sigma_r_sq_hat;
    bool zero_variance = false;
    int n = 0;
    double bandwidth = 1.0;
    RngSeed seed;

    nlohmann::json to_json() const;
};

// U-statistic (1/(n(n-1))) sum_{i != j} Gamma(i,j), compensated summation.
double u_statistic(const GammaMatrix& g);

// V-statistic: mean over all n^2 entries including the diagonal.
double v_statistic(const GammaMatrix& g);

// U-statistic of the squared off-diagonal entries; estimates P0^2 Gamma_0^2.
double second_moment(const GammaMatrix& g);

// Eigenvalues of the centered Gram matrix divided by n. Negative estimates
// are dropped and counted; `eigen_count` bounds how many positive ones are
// kept (nullopt keeps all).
EigenSpectrum eigen_spectrum(const Eigen::MatrixXd& centered,
                             std::optional<int> eigen_count);

// Empirical (1-alpha) quantile of sum_k lambda_k (Z_k^2 - 1) over mc_draws
// replicates. Empty spectrum yields 0.
double quantile_mc(const EigenSpectrum& spectrum, double alpha, int mc_draws,
                   RngSeed seed);

// Closed-form cutoff for the S == 0 case: 2 (z_{1-alpha/2}^2 - 1) * mean(dr^2).
struct DegenerateSCutoff {
    double cutoff = 0.0;
    double sigma_r_sq_hat = 0.0;
    bool zero_variance = false;
};
DegenerateSCutoff cutoff_degenerate_s(const FunctionalEvaluations& fe, double alpha);

// Chebyshev upper bound 6.2 * sqrt(U_n Gamma_n^2); alpha must be 0.05.
double cutoff_chebyshev(double second_moment_value, double alpha = 0.05);

// Full pipeline: Gamma matrix -> psi_n -> cutoff per method -> decision.
TestResult run_test(const FunctionalEvaluations& fe, const TestConfig& config,
                    int threads = 1);

}  // namespace mmdeq
