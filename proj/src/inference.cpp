#include "mmdeq/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mmdeq/parallel.hpp"
#include "mmdeq/rng.hpp"
#include "mmdeq/stats.hpp"

namespace mmdeq {

double u_statistic(const GammaMatrix& g) {
    const int n = g.n();
    if (n < 2) throw validation_error("TooFewObservations", "U-statistic needs n >= 2");
    KahanSum sum;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) sum.add(g.values(i, j));
    }
    // Off-diagonal pairs counted once; the ordered-pair average doubles them.
    return 2.0 * sum.value() / (static_cast<double>(n) * (n - 1));
}

double v_statistic(const GammaMatrix& g) {
    const int n = g.n();
    KahanSum sum;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) sum.add(g.values(i, j));
    }
    return sum.value() / (static_cast<double>(n) * n);
}

double second_moment(const GammaMatrix& g) {
    const int n = g.n();
    if (n < 2) throw validation_error("TooFewObservations", "U-statistic needs n >= 2");
    KahanSum sum;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = g.values(i, j);
            sum.add(v * v);
        }
    }
    return 2.0 * sum.value() / (static_cast<double>(n) * (n - 1));
}

EigenSpectrum eigen_spectrum(const Eigen::MatrixXd& centered, std::optional<int> eigen_count) {
    const int n = static_cast<int>(centered.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.compute(centered, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw numeric_error("EigensolverFailure", "symmetric eigendecomposition did not converge");
    }
    Eigen::VectorXd nu = solver.eigenvalues();   // ascending
    // Eigenvalues within machine noise of zero are neither signal nor
    // negatives worth counting.
    const double zero_tol =
        nu.size() * std::numeric_limits<double>::epsilon() * nu.cwiseAbs().maxCoeff();
    EigenSpectrum spec;
    for (Eigen::Index k = nu.size() - 1; k >= 0; --k) {
        if (nu[k] > zero_tol) {
            spec.lambda_hat.push_back(nu[k] / n);
        } else if (nu[k] < -zero_tol) {
            ++spec.dropped_negative_count;
        }
    }
    const int keep = eigen_count ? std::min(*eigen_count, static_cast<int>(spec.lambda_hat.size()))
                                 : static_cast<int>(spec.lambda_hat.size());
    spec.lambda_hat.resize(static_cast<size_t>(keep));
    spec.kept_count = keep;
    return spec;
}

double quantile_mc(const EigenSpectrum& spectrum, double alpha, int mc_draws, RngSeed seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw validation_error("SchemaMismatch", "alpha must lie in (0,1)");
    }
    if (spectrum.lambda_hat.empty()) return 0.0;
    RngStream rng(seed);
    std::vector<double> draws(static_cast<size_t>(mc_draws));
    for (auto& dv : draws) {
        double acc = 0.0;
        for (double lam : spectrum.lambda_hat) {
            const double z = rng.normal();
            acc += lam * (z * z - 1.0);
        }
        dv = acc;
    }
    // k-th order statistic with k = ceil((1-alpha) * N): monotone in a
    // positive rescaling of the spectrum.
    const auto k = static_cast<size_t>(
        std::clamp<long long>(static_cast<long long>(std::ceil((1.0 - alpha) * mc_draws)), 1,
                              mc_draws));
    std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(k - 1), draws.end());
    return draws[k - 1];
}

DegenerateSCutoff cutoff_degenerate_s(const FunctionalEvaluations& fe, double alpha) {
    if (fe.dim() != 1) {
        throw validation_error("NotDegenerateS", "closed-form cutoff requires d = 1");
    }
    if (fe.s.cwiseAbs().maxCoeff() != 0.0 || fe.ds.cwiseAbs().maxCoeff() != 0.0) {
        throw validation_error("NotDegenerateS", "closed-form cutoff requires S == 0 and D^S == 0");
    }
    DegenerateSCutoff out;
    out.sigma_r_sq_hat = fe.dr.array().square().mean();
    if (out.sigma_r_sq_hat == 0.0) {
        out.zero_variance = true;
        out.cutoff = 0.0;
        return out;
    }
    const double z = normal_quantile(1.0 - alpha / 2.0);
    out.cutoff = 2.0 * (z * z - 1.0) * out.sigma_r_sq_hat;
    return out;
}

double cutoff_chebyshev(double second_moment_value, double alpha) {
    if (alpha != 0.05) {
        throw validation_error("UnsupportedAlpha", "Chebyshev bound is tabulated for alpha = 0.05 only");
    }
    if (second_moment_value < 0.0) {
        throw numeric_error("NonFiniteValue", "second moment must be nonnegative");
    }
    return 6.2 * std::sqrt(second_moment_value);
}

TestResult run_test(const FunctionalEvaluations& fe, const TestConfig& config, int threads) {
    config.validate();
    fe.validate();

    const FunctionalEvaluations scaled = fe.rescaled(config.bandwidth);
    const GammaMatrix g = gamma_matrix(scaled, threads);
    const int n = g.n();

    TestResult res;
    res.method = config.calibration;
    res.alpha = config.alpha;
    res.n = n;
    res.bandwidth = config.bandwidth;
    res.seed = config.seed;
    res.psi_n = u_statistic(g);
    res.n_psi_n = n * res.psi_n;
    res.second_moment = second_moment(g);

    switch (config.calibration) {
        case Calibration::DegenerateS: {
            const DegenerateSCutoff c = cutoff_degenerate_s(scaled, config.alpha);
            res.cutoff = c.cutoff;
            res.sigma_r_sq_hat = c.sigma_r_sq_hat;
            res.zero_variance = c.zero_variance;
            if (!c.zero_variance) {
                res.p_value = chisq1_sf(res.n_psi_n / (2.0 * c.sigma_r_sq_hat) + 1.0);
            }
            break;
        }
        case Calibration::GramEigen: {
            const Eigen::MatrixXd centered = centered_gram(g);
            EigenSpectrum spec = eigen_spectrum(centered, config.resolve_eigen_count(n));
            // One set of draws serves both the cutoff and the tail fraction.
            RngStream rng(config.seed.derived(0x9C4Eu));
            std::vector<double> draws(static_cast<size_t>(config.mc_draws), 0.0);
            if (!spec.lambda_hat.empty()) {
                for (auto& dv : draws) {
                    double acc = 0.0;
                    for (double lam : spec.lambda_hat) {
                        const double z = rng.normal();
                        acc += lam * (z * z - 1.0);
                    }
                    dv = acc;
                }
            }
            long long ge = 0;
            for (double dv : draws) {
                if (dv >= res.n_psi_n) ++ge;
            }
            res.p_value = static_cast<double>(ge) / config.mc_draws;
            if (spec.lambda_hat.empty()) {
                res.cutoff = 0.0;
            } else {
                const auto k = static_cast<size_t>(std::clamp<long long>(
                    static_cast<long long>(std::ceil((1.0 - config.alpha) * config.mc_draws)), 1,
                    config.mc_draws));
                std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(k - 1),
                                 draws.end());
                res.cutoff = draws[k - 1];
            }
            res.spectrum = std::move(spec);
            break;
        }
        case Calibration::Chebyshev:
            res.cutoff = cutoff_chebyshev(res.second_moment, config.alpha);
            break;
    }
    res.reject = res.n_psi_n > res.cutoff;
    return res;
}

nlohmann::json TestResult::to_json() const {
    nlohmann::json j;
    j["psi_n"] = psi_n;
    j["n_psi_n"] = n_psi_n;
    j["cutoff"] = cutoff;
    j["method"] = mmdeq::to_string(method);
    j["alpha"] = alpha;
    j["reject"] = reject;
    j["second_moment"] = second_moment;
    j["n"] = n;
    j["bandwidth"] = bandwidth;
    j["seed"] = {{"seed", seed.seed}, {"stream", seed.stream}};
    if (p_value) j["p_value"] = *p_value;
    if (sigma_r_sq_hat) j["sigma_r_sq_hat"] = *sigma_r_sq_hat;
    if (zero_variance) j["zero_variance"] = true;
    if (spectrum) {
        j["spectrum"] = {{"lambda_hat", spectrum->lambda_hat},
                         {"dropped_negative_count", spectrum->dropped_negative_count}};
    }
    return j;
}

}  // namespace mmdeq
