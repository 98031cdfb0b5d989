// Acceptance suite: one line per criterion, PASS/FAIL, nonzero exit on any
// failure. Criterion numbers may be passed as arguments to run a subset.

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmdeq/inference.hpp"
#include "mmdeq/nuisance.hpp"
#include "mmdeq/oracle.hpp"
#include "mmdeq/rng.hpp"
#include "mmdeq/simulation.hpp"

using namespace mmdeq;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(5) << v;
    return s.str();
}

FunctionalEvaluations degenerate_fe(const Eigen::VectorXd& dr) {
    FunctionalEvaluations fe;
    const auto n = dr.size();
    fe.r = Eigen::MatrixXd::Zero(n, 1);
    fe.s = Eigen::MatrixXd::Zero(n, 1);
    fe.dr = dr;
    fe.ds = Eigen::MatrixXd::Zero(n, 1);
    fe.bound_b = 1.0;
    return fe;
}

double mc_se(double rate, int reps) { return std::sqrt(rate * (1.0 - rate) / reps); }

// --- 1. Exact identity: double mass sum over Gamma equals Psi. -------------
Outcome criterion1() {
    std::vector<DiscreteDgp> fixtures_list = {fixtures::h0_swap(), fixtures::h1_binary(),
                                              fixtures::degenerate_s_null(),
                                              fixtures::constant_pair()};
    for (std::uint64_t s = 0; s < 100; ++s) {
        fixtures_list.push_back(fixtures::random_fixture(s));
        fixtures_list.push_back(fixtures::random_fixture(s + 9000, 3));
    }
    double worst = 0.0;
    for (const auto& d : fixtures_list) {
        worst = std::max(worst, std::abs(exact_gamma_mean(d).total - exact_psi(d)));
    }
    return {worst <= 1e-12,
            "max |sum p_i p_j Gamma - Psi| = " + fmt(worst) + " over " +
                std::to_string(fixtures_list.size()) + " fixtures (tol 1e-12)"};
}

// --- 2. One-degeneracy of the kernel under the null. -----------------------
Outcome criterion2() {
    const double w1 = exact_gamma_mean(fixtures::h0_swap()).rowwise.cwiseAbs().maxCoeff();
    const double w2 =
        exact_gamma_mean(fixtures::degenerate_s_null()).rowwise.cwiseAbs().maxCoeff();
    const double worst = std::max(w1, w2);
    return {worst <= 1e-10, "max |row mean| = " + fmt(worst) + " (tol 1e-10)"};
}

// --- 3. Rank-one structure, its spectrum, and the closed-form cutoff. ------
Outcome criterion3() {
    const int n = 100;
    RngStream rng(RngSeed{300, 0});
    Eigen::VectorXd dr(n);
    for (int i = 0; i < n / 2; ++i) {
        const double v = 0.5 + rng.uniform();
        dr[2 * i] = v;
        dr[2 * i + 1] = -v;   // exact zero sample mean
    }
    const FunctionalEvaluations fe = degenerate_fe(dr);

    const GammaMatrix g = gamma_matrix(fe);
    double elem_err = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            elem_err = std::max(elem_err, std::abs(g.values(i, j) - 2.0 * dr[i] * dr[j]));
        }
    }
    if (elem_err > 1e-12) return {false, "Gamma vs 2 dr dr' error " + fmt(elem_err)};

    const Eigen::VectorXd dc = dr.array() - dr.mean();
    const EigenSpectrum spec = eigen_spectrum(centered_gram(g), std::nullopt);
    if (spec.lambda_hat.size() != 1) {
        return {false, "expected one positive eigenvalue, got " +
                           std::to_string(spec.lambda_hat.size())};
    }
    const double lam_expect = (2.0 / n) * dc.squaredNorm();
    const double lam_err = std::abs(spec.lambda_hat[0] - lam_expect);
    if (lam_err > 1e-8) return {false, "eigenvalue error " + fmt(lam_err)};

    const double sigma2 = dr.array().square().mean();
    const double closed_form = 5.682917642 * sigma2;
    const double q = quantile_mc(spec, 0.05, 100000, RngSeed{301, 0});
    const double rel = std::abs(q - closed_form) / closed_form;
    return {rel <= 0.02, "Gamma=2drdr' err " + fmt(elem_err) + "; lambda err " + fmt(lam_err) +
                             "; MC quantile " + fmt(q) + " vs " + fmt(closed_form) +
                             " (rel " + fmt(rel) + ", tol 2%)"};
}

// --- 4 & 5 share one replication loop (same DGP, two calibrations). --------
struct NullLevelRates {
    double gram = 0.0;
    double cheb = 0.0;
    int reps = 0;
};

NullLevelRates null_level_rates() {
    static NullLevelRates cached;
    if (cached.reps > 0) return cached;
    const int n = 500, reps = 2000;
    TestConfig cfg;
    cfg.calibration = Calibration::GramEigen;
    cfg.mc_draws = 10000;
    int rej_gram = 0, rej_cheb = 0;
    for (int rep = 0; rep < reps; ++rep) {
        const RngSeed rs = RngSeed{450, 0}.derived(static_cast<std::uint64_t>(rep));
        RngStream rng(rs);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y[i] = rng.normal();
        cfg.seed = rs.derived(1);
        const TestResult res = run_test(degenerate_fe(y), cfg);
        rej_gram += res.reject;
        rej_cheb += res.n_psi_n > cutoff_chebyshev(res.second_moment);
    }
    cached = {static_cast<double>(rej_gram) / reps, static_cast<double>(rej_cheb) / reps, reps};
    return cached;
}

Outcome criterion4() {
    const NullLevelRates r = null_level_rates();
    return {r.gram >= 0.03 && r.gram <= 0.07,
            "GramEigen null rejection rate " + fmt(r.gram) + " at n=500, " +
                std::to_string(r.reps) + " reps (band [0.03, 0.07])"};
}

Outcome criterion5() {
    const NullLevelRates r = null_level_rates();
    const bool constant_ok = 6.2 >= std::sqrt(38.0);
    return {constant_ok && r.cheb <= 0.065,
            "Chebyshev null rejection rate " + fmt(r.cheb) + " (bound 0.065); 6.2 >= sqrt(38) " +
                (constant_ok ? "holds" : "fails")};
}

// --- Simulation harness shared by criteria 6, 7, 10. -----------------------
double sim_rate(Scenario sc, int signal, int n, int reps, std::uint64_t seed) {
    ScenarioSpec spec;
    spec.scenario = sc;
    spec.signal_coords = signal;
    spec.n = n;
    spec.replications = reps;
    spec.test = Example::Ex1_CATE;
    spec.outcome_model = Regressor::nadaraya_watson(1.0);
    spec.propensity_model = Propensity::known_constant(0.5);
    spec.seed = RngSeed{seed, 0};
    TestConfig cfg;
    cfg.calibration = Calibration::GramEigen;
    cfg.sample_splitting = Splitting::TwoFold;
    cfg.mc_draws = 10000;
    return run_experiment(spec, cfg).rate;
}

Outcome criterion6() {
    const int reps = 500;
    const double r250 = sim_rate(Scenario::S1a, 0, 250, reps, 600);
    const double r1000 = sim_rate(Scenario::S1a, 0, 1000, reps, 601);
    const double band = 2.0 * std::hypot(mc_se(r250, reps), mc_se(r1000, reps));
    const bool pass = r1000 <= 0.10 && r1000 <= r250 + band;
    return {pass, "scenario-1a type I: n=250 -> " + fmt(r250) + ", n=1000 -> " + fmt(r1000) +
                      " (<= 0.10 and non-increasing up to " + fmt(band) + ")"};
}

Outcome criterion7() {
    const int reps = 500;
    const double r250 = sim_rate(Scenario::S1c, 0, 250, reps, 700);
    const double r500 = sim_rate(Scenario::S1c, 0, 500, reps, 701);
    const double r1000 = sim_rate(Scenario::S1c, 0, 1000, reps, 702);
    const double slack = 2.0 * mc_se(0.5, reps);
    const bool monotone = r500 > r250 - slack && r1000 > r500 - slack;
    const bool powered = r1000 > 0.5;
    std::string detail = "scenario-1c power: " + fmt(r250) + " -> " + fmt(r500) + " -> " +
                         fmt(r1000) + " across n in {250, 500, 1000}";
    if (monotone && !powered) {
        // Criterion degrades to monotonicity alone when 0.5 is not reached;
        // report the shortfall.
        detail += " [degraded: monotone but power " + fmt(r1000) + " <= 0.5, gap " +
                  fmt(0.5 - r1000) + "]";
    }
    return {monotone, detail};
}

// --- 8. Double robustness of the Example-1 remainder. ----------------------
Outcome criterion8() {
    RngStream rng(RngSeed{800, 0});
    const int m = 15;
    Ex1Discrete d;
    d.pw = Eigen::VectorXd::Constant(m, 1.0 / m);
    d.pi0.resize(m);
    d.mu0.resize(m, 2);
    d.mu_hat.resize(m, 2);
    for (int i = 0; i < m; ++i) {
        d.pi0[i] = 0.15 + 0.7 * rng.uniform();
        d.mu0(i, 0) = rng.normal();
        d.mu0(i, 1) = rng.normal();
    }
    d.pi_hat = d.pi0;   // propensity specified correctly
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        for (int i = 0; i < m; ++i) {
            d.mu_hat(i, 0) = 3.0 * rng.normal();
            d.mu_hat(i, 1) = 3.0 * rng.normal();
        }
        worst = std::max(worst, remainder_ex1(d).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-10, "max |Rem| over 100 misspecified outcome fits = " + fmt(worst) +
                                " (tol 1e-10)"};
}

// --- 9. Remainder orders via ratio tests. ----------------------------------
Outcome criterion9() {
    const auto h0 = fixtures::remainder_family(true);
    const double ratio0 = exact_remainder_bounds(h0.base, h0.perturbed(0.04)).rem_psi /
                          exact_remainder_bounds(h0.base, h0.perturbed(0.02)).rem_psi;
    const auto h1 = fixtures::remainder_family(false);
    const double ratio1 = exact_remainder_bounds(h1.base, h1.perturbed(0.04)).rem_psi /
                          exact_remainder_bounds(h1.base, h1.perturbed(0.02)).rem_psi;
    const bool pass = std::abs(ratio0 - 16.0) <= 1.6 && std::abs(ratio1 - 4.0) <= 0.4;
    return {pass, "H0 ratio " + fmt(ratio0) + " (16 +/- 1.6); H1 ratio " + fmt(ratio1) +
                      " (4 +/- 0.4)"};
}

// --- 10. Multivariate kernel: reduction and scenario-3 property. ------------
Outcome criterion10() {
    RngStream rng(RngSeed{1000, 0});
    double worst = 0.0;
    for (int rep = 0; rep < 10000; ++rep) {
        const double t = rng.normal(), u = rng.normal();
        const double dt = rng.normal(), du = rng.normal();
        Eigen::RowVectorXd tv(1), uv(1), dtv(1), duv(1);
        tv << t;
        uv << u;
        dtv << dt;
        duv << du;
        const double diff = t - u;
        const double uni = (2.0 * diff * (du - dt) + 1.0 -
                            (4.0 * diff * diff - 2.0) * dt * du) *
                           std::exp(-diff * diff);
        worst = std::max(worst, std::abs(gamma_tu(tv, uv, dtv, duv) - uni));
    }
    if (worst > 1e-14) return {false, "d=1 reduction error " + fmt(worst)};

    const int reps = 200, n = 1000;
    const double null_rate = sim_rate(Scenario::S3, 0, n, reps, 1001);
    const double power = sim_rate(Scenario::S3, 20, n, reps, 1002);
    const bool pass = null_rate <= 0.10 && power > null_rate;
    return {pass, "reduction err " + fmt(worst) + "; scenario-3 rates: signal 0 -> " +
                      fmt(null_rate) + " (<= 0.10), signal 20 -> " + fmt(power) +
                      " (monotone in signal)"};
}

// --- 11. Root-n concentration of psi_n under a fixed alternative. -----------
Outcome criterion11() {
    auto sd_at = [](int n, std::uint64_t seed) {
        const int reps = 500;
        std::vector<double> psis(reps);
        for (int rep = 0; rep < reps; ++rep) {
            RngStream rng(RngSeed{seed, 0}.derived(static_cast<std::uint64_t>(rep)));
            FunctionalEvaluations fe;
            fe.r.resize(n, 1);
            fe.s = Eigen::MatrixXd::Zero(n, 1);
            fe.dr.resize(n, 1);
            fe.ds = Eigen::MatrixXd::Zero(n, 1);
            fe.bound_b = 1.0;
            for (int i = 0; i < n; ++i) {
                const double w = rng.normal();
                const double r0 = 0.6 * std::tanh(w);   // known truth, no fitting
                const double y = r0 + 0.5 * rng.normal();
                fe.r(i, 0) = r0;
                fe.dr(i, 0) = y - r0;
            }
            psis[static_cast<size_t>(rep)] = u_statistic(gamma_matrix(fe));
        }
        double mean = 0.0;
        for (double p : psis) mean += p;
        mean /= reps;
        double var = 0.0;
        for (double p : psis) var += (p - mean) * (p - mean);
        return std::sqrt(var / (reps - 1));
    };
    const double sd500 = sd_at(500, 1100);
    const double sd2000 = sd_at(2000, 1101);
    const double ratio = sd500 / sd2000;
    return {ratio >= 1.5 && ratio <= 2.5,
            "sd(psi_n): n=500 -> " + fmt(sd500) + ", n=2000 -> " + fmt(sd2000) + ", ratio " +
                fmt(ratio) + " (2 +/- 25%)"};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    struct Entry {
        int id;
        const char* name;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {1, "exact-identity-p2gamma-psi", criterion1},
        {2, "h0-one-degeneracy", criterion2},
        {3, "rank-one-spectrum-closed-form", criterion3},
        {4, "null-level-gram-eigen", criterion4},
        {5, "chebyshev-validity", criterion5},
        {6, "sim-1a-type-one-trend", criterion6},
        {7, "sim-1c-power-monotone", criterion7},
        {8, "ex1-double-robustness", criterion8},
        {9, "remainder-order-ratios", criterion9},
        {10, "multivariate-reduction-and-power", criterion10},
        {11, "psi-root-n-concentration", criterion11},
    };

    bool all = true;
    for (const auto& e : entries) {
        if (!wanted.empty() && !wanted.count(e.id)) continue;
        Outcome o;
        try {
            o = e.fn();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion-" << e.id << "  " << e.name
                  << ": " << o.detail << std::endl;
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
