#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmdeq/kernel.hpp"
#include "mmdeq/types.hpp"

namespace mmdeq {

// Small discrete distribution with functional values attached to each atom.
// Ground truth for the analytic identities: everything here is computed by
// exact summation over the support.
struct DiscreteDgp {
    Eigen::VectorXd probs;              // m, sums to 1
    Eigen::MatrixXd r, s, dr, ds;       // m x d
    std::vector<int> group_r, group_s;  // x^T levels, for conditional-mean checks
    double bound_b = 1.0;

    int m() const { return static_cast<int>(probs.size()); }
    int dim() const { return static_cast<int>(r.cols()); }
    FunctionalEvaluations as_evaluations() const;
    void validate() const;   // probs simplex, conditional mean of dr/ds zero per group
};

enum class PhiWhich { RR, RS, SS };

// Phi^{TU} = sum_i sum_j p_i p_j exp(-||t_i - u_j||^2).
double exact_phi(const DiscreteDgp& dgp, PhiWhich which);

// Psi = Phi^{RR} - 2 Phi^{RS} + Phi^{SS}.
double exact_psi(const DiscreteDgp& dgp);

// rowwise_i = sum_j p_j Gamma(o_i, o_j); total = sum_i p_i rowwise_i.
// total equals exact_psi (the P = P0 case of the remainder identity), and
// rowwise vanishes on H0 fixtures (one-degeneracy).
struct GammaMean {
    Eigen::VectorXd rowwise;
    double total = 0.0;
};
GammaMean exact_gamma_mean(const DiscreteDgp& dgp);

// A perturbed distribution sharing the support and probabilities of a base
// dgp, carrying its own functional values and per-atom linearization
// remainders.
struct PerturbedDgp {
    Eigen::MatrixXd r, s, dr, ds;    // m x d
    Eigen::VectorXd rem_r, rem_s;    // per-atom Rem_P^R, Rem_P^S
};

struct RemainderBounds {
    double rem_psi = 0.0;   // P0^2 Gamma_P - psi_0
    double k0 = 0.0;        // ||L||_2 ||M||_2 + ||L||_1^2 + ||M||_4^4
    double k1 = 0.0;        // ||L||_1 + ||M||_2^2
};
RemainderBounds exact_remainder_bounds(const DiscreteDgp& dgp0, const PerturbedDgp& dgpP);

// Canned fixtures.
namespace fixtures {

// H0 without pointwise equality: r and s swap values across two covariate
// levels, so R(O) and S(O) share a law while R != S.
DiscreteDgp h0_swap();

// H1: r in {0,1}, s == 0; Psi = 0.5 - 0.5 e^{-1}.
DiscreteDgp h1_binary();

// Rank-one structure: s == 0, r == 0, dr = +/- c per level, so
// Gamma_0 = 2 dr dr'.
DiscreteDgp degenerate_s_null();

// Constant r and s with dr == ds (first-order degeneracy case (ii)).
DiscreteDgp constant_pair();

// Random fixture satisfying the conditional-mean-zero contract under its own
// probabilities. Deterministic in `salt`.
DiscreteDgp random_fixture(std::uint64_t salt, int dim = 1);

// Conditional-mean DGP (Example-3 structure) with perturbation r -> r + eps*delta
// and exactly zero linearization remainder. `null_r` zeroes out the true r.
struct RemainderFamily {
    DiscreteDgp base;
    PerturbedDgp perturbed(double eps) const;
    Eigen::VectorXd delta;   // per-atom perturbation direction (constant per group)
};
RemainderFamily remainder_family(bool null_r);

}  // namespace fixtures

// Runs every oracle identity, printing one pass/fail line per identity.
// Returns true iff all hold.
bool run_oracle_checks(std::ostream& out);

}  // namespace mmdeq
