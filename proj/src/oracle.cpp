#include "mmdeq/oracle.hpp"

#include <cmath>
#include <map>
#include <ostream>

#include "mmdeq/rng.hpp"
#include "mmdeq/stats.hpp"

namespace mmdeq {

FunctionalEvaluations DiscreteDgp::as_evaluations() const {
    FunctionalEvaluations fe;
    fe.r = r;
    fe.s = s;
    fe.dr = dr;
    fe.ds = ds;
    fe.bound_b = bound_b;
    return fe;
}

void DiscreteDgp::validate() const {
    const int atoms = m();
    if (atoms < 1) throw validation_error("SchemaMismatch", "empty support");
    if (std::abs(probs.sum() - 1.0) > 1e-12 || probs.minCoeff() < 0.0) {
        throw validation_error("SchemaMismatch", "probabilities must form a simplex");
    }
    if (static_cast<int>(group_r.size()) != atoms || static_cast<int>(group_s.size()) != atoms) {
        throw numeric_error("DimensionMismatch", "conditioning groups must cover every atom");
    }
    if (r.cwiseAbs().maxCoeff() > bound_b + 1e-12 || s.cwiseAbs().maxCoeff() > bound_b + 1e-12) {
        throw validation_error("SchemaMismatch", "|r| and |s| must respect the range bound");
    }
    // Condition (S3): conditional mean of the gradient is zero per group.
    auto check_groups = [&](const std::vector<int>& grp, const Eigen::MatrixXd& grad,
                            const char* name) {
        std::map<int, Eigen::RowVectorXd> sums;
        for (int i = 0; i < atoms; ++i) {
            auto [it, fresh] = sums.try_emplace(grp[static_cast<size_t>(i)],
                                                Eigen::RowVectorXd::Zero(grad.cols()));
            it->second += probs[i] * grad.row(i);
            (void)fresh;
        }
        for (const auto& [g, sum] : sums) {
            if (sum.cwiseAbs().maxCoeff() > 1e-12) {
                throw validation_error("SchemaMismatch",
                                       std::string(name) + " gradient not conditionally centered");
            }
        }
    };
    check_groups(group_r, dr, "R");
    check_groups(group_s, ds, "S");
}

double exact_phi(const DiscreteDgp& dgp, PhiWhich which) {
    const Eigen::MatrixXd& t = which == PhiWhich::SS ? dgp.s : dgp.r;
    const Eigen::MatrixXd& u = which == PhiWhich::RR ? dgp.r : dgp.s;
    KahanSum sum;
    for (int i = 0; i < dgp.m(); ++i) {
        for (int j = 0; j < dgp.m(); ++j) {
            sum.add(dgp.probs[i] * dgp.probs[j] *
                    std::exp(-(t.row(i) - u.row(j)).squaredNorm()));
        }
    }
    return sum.value();
}

double exact_psi(const DiscreteDgp& dgp) {
    return exact_phi(dgp, PhiWhich::RR) - 2.0 * exact_phi(dgp, PhiWhich::RS) +
           exact_phi(dgp, PhiWhich::SS);
}

GammaMean exact_gamma_mean(const DiscreteDgp& dgp) {
    const FunctionalEvaluations fe = dgp.as_evaluations();
    GammaMean out;
    out.rowwise.resize(dgp.m());
    KahanSum total;
    for (int i = 0; i < dgp.m(); ++i) {
        KahanSum row;
        for (int j = 0; j < dgp.m(); ++j) {
            row.add(dgp.probs[j] * gamma_combined(fe, i, j));
        }
        out.rowwise[i] = row.value();
        total.add(dgp.probs[i] * out.rowwise[i]);
    }
    out.total = total.value();
    return out;
}

RemainderBounds exact_remainder_bounds(const DiscreteDgp& dgp0, const PerturbedDgp& dgpP) {
    const int m = dgp0.m();
    if (dgpP.r.rows() != m || dgpP.s.rows() != m || dgpP.dr.rows() != m || dgpP.ds.rows() != m ||
        dgpP.rem_r.size() != m || dgpP.rem_s.size() != m) {
        throw numeric_error("MismatchedSupport", "perturbed dgp must share the base support");
    }
    FunctionalEvaluations feP;
    feP.r = dgpP.r;
    feP.s = dgpP.s;
    feP.dr = dgpP.dr;
    feP.ds = dgpP.ds;
    feP.bound_b = std::max(
        {dgp0.bound_b, dgpP.r.cwiseAbs().maxCoeff(), dgpP.s.cwiseAbs().maxCoeff()});

    RemainderBounds out;
    KahanSum p2gamma;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            p2gamma.add(dgp0.probs[i] * dgp0.probs[j] * gamma_combined(feP, i, j));
        }
    }
    out.rem_psi = p2gamma.value() - exact_psi(dgp0);

    Eigen::VectorXd L(m), M(m);
    for (int i = 0; i < m; ++i) {
        L[i] = std::max(std::abs(dgpP.rem_r[i]), std::abs(dgpP.rem_s[i]));
        M[i] = std::max((dgpP.r.row(i) - dgp0.r.row(i)).cwiseAbs().maxCoeff(),
                        (dgpP.s.row(i) - dgp0.s.row(i)).cwiseAbs().maxCoeff());
    }
    auto norm_p = [&](const Eigen::VectorXd& f, double p) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += dgp0.probs[i] * std::pow(std::abs(f[i]), p);
        return std::pow(acc, 1.0 / p);
    };
    const double l1 = norm_p(L, 1.0), l2 = norm_p(L, 2.0);
    const double m2 = norm_p(M, 2.0), m4 = norm_p(M, 4.0);
    out.k0 = l2 * m2 + l1 * l1 + m4 * m4 * m4 * m4;
    out.k1 = l1 + m2 * m2;
    return out;
}

namespace fixtures {

namespace {

// Two covariate levels x two noise signs, equiprobable.
DiscreteDgp two_by_two(double r0, double r1, double s0, double s1, double cr, double cs) {
    DiscreteDgp d;
    d.probs = Eigen::VectorXd::Constant(4, 0.25);
    d.r.resize(4, 1);
    d.s.resize(4, 1);
    d.dr.resize(4, 1);
    d.ds.resize(4, 1);
    d.group_r = {0, 0, 1, 1};
    d.group_s = {0, 0, 1, 1};
    // Atoms: (x=0, eta=-1), (x=0, eta=+1), (x=1, eta=-1), (x=1, eta=+1).
    d.r << r0, r0, r1, r1;
    d.s << s0, s0, s1, s1;
    d.dr << -cr, cr, -cr, cr;
    d.ds << -cs, cs, -cs, cs;
    d.bound_b = 1.0;
    d.validate();
    return d;
}

}  // namespace

DiscreteDgp h0_swap() { return two_by_two(0.0, 1.0, 1.0, 0.0, 0.35, 0.2); }

DiscreteDgp h1_binary() { return two_by_two(0.0, 1.0, 0.0, 0.0, 0.35, 0.0); }

DiscreteDgp degenerate_s_null() { return two_by_two(0.0, 0.0, 0.0, 0.0, 0.6, 0.0); }

DiscreteDgp constant_pair() {
    DiscreteDgp d;
    d.probs = Eigen::VectorXd::Constant(2, 0.5);
    d.r.resize(2, 1);
    d.s.resize(2, 1);
    d.dr.resize(2, 1);
    d.ds.resize(2, 1);
    d.group_r = {0, 0};
    d.group_s = {0, 0};
    d.r << 0.3, 0.3;
    d.s << -0.2, -0.2;
    d.dr << 0.6, -0.6;
    d.ds << 0.6, -0.6;
    d.bound_b = 1.0;
    d.validate();
    return d;
}

DiscreteDgp random_fixture(std::uint64_t salt, int dim) {
    RngStream rng(RngSeed{0xFD3Bu, 0}.derived(salt));
    const int groups = 2 + static_cast<int>(rng.next_u64() % 3);
    const int m = 2 * groups;
    DiscreteDgp d;
    d.probs.resize(m);
    d.r.resize(m, dim);
    d.s.resize(m, dim);
    d.dr.resize(m, dim);
    d.ds.resize(m, dim);
    d.group_r.resize(static_cast<size_t>(m));
    d.group_s.resize(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) d.probs[i] = 0.1 + rng.uniform();
    d.probs /= d.probs.sum();
    for (int g = 0; g < groups; ++g) {
        const int i0 = 2 * g, i1 = 2 * g + 1;
        d.group_r[static_cast<size_t>(i0)] = d.group_r[static_cast<size_t>(i1)] = g;
        d.group_s[static_cast<size_t>(i0)] = d.group_s[static_cast<size_t>(i1)] = g;
        const double q0 = d.probs[i0] / (d.probs[i0] + d.probs[i1]);
        for (int k = 0; k < dim; ++k) {
            const double rg = 1.8 * rng.uniform() - 0.9;
            const double sg = 1.8 * rng.uniform() - 0.9;
            d.r(i0, k) = d.r(i1, k) = rg;
            d.s(i0, k) = d.s(i1, k) = sg;
            const double v = 2.0 * rng.uniform() - 1.0;
            d.dr(i0, k) = v;
            d.dr(i1, k) = -v * q0 / (1.0 - q0);
            const double u = 2.0 * rng.uniform() - 1.0;
            d.ds(i0, k) = u;
            d.ds(i1, k) = -u * q0 / (1.0 - q0);
        }
    }
    d.bound_b = 1.0;
    d.validate();
    return d;
}

PerturbedDgp RemainderFamily::perturbed(double eps) const {
    PerturbedDgp p;
    p.r = base.r + eps * delta;
    p.s = base.s;
    p.dr = base.dr - eps * delta;   // gradient is y - r(x); the y values are fixed
    p.ds = base.ds;
    // Conditional-mean functionals linearize exactly.
    p.rem_r = Eigen::VectorXd::Zero(base.m());
    p.rem_s = Eigen::VectorXd::Zero(base.m());
    return p;
}

RemainderFamily remainder_family(bool null_r) {
    // Three covariate groups, two outcome atoms each; r is the conditional
    // mean of the outcome, dr the residual, s == 0.
    const int groups = 3;
    const double pg[] = {0.3, 0.45, 0.25};
    const double q[] = {0.4, 0.55, 0.3};
    const double spread[] = {0.8, -0.6, 0.5};
    const double mean_r[] = {0.3, -0.2, 0.45};
    const double dir[] = {1.0, -0.7, 0.4};

    RemainderFamily fam;
    const int m = 2 * groups;
    DiscreteDgp& d = fam.base;
    d.probs.resize(m);
    d.r.resize(m, 1);
    d.s = Eigen::MatrixXd::Zero(m, 1);
    d.dr.resize(m, 1);
    d.ds = Eigen::MatrixXd::Zero(m, 1);
    d.group_r.resize(static_cast<size_t>(m));
    d.group_s.resize(static_cast<size_t>(m));
    fam.delta.resize(m);
    for (int g = 0; g < groups; ++g) {
        const int i0 = 2 * g, i1 = 2 * g + 1;
        d.probs[i0] = pg[g] * q[g];
        d.probs[i1] = pg[g] * (1.0 - q[g]);
        d.group_r[static_cast<size_t>(i0)] = d.group_r[static_cast<size_t>(i1)] = g;
        d.group_s[static_cast<size_t>(i0)] = d.group_s[static_cast<size_t>(i1)] = g;
        const double a = null_r ? 0.0 : mean_r[g];
        const double y0 = a + (1.0 - q[g]) * spread[g];
        const double y1 = a - q[g] * spread[g];
        d.r(i0, 0) = d.r(i1, 0) = a;
        d.dr(i0, 0) = y0 - a;
        d.dr(i1, 0) = y1 - a;
        fam.delta[i0] = fam.delta[i1] = dir[g];
    }
    d.bound_b = 1.0;
    d.validate();
    return fam;
}

}  // namespace fixtures

namespace {

struct Check {
    std::string name;
    bool pass;
    std::string detail;
};

}  // namespace

bool run_oracle_checks(std::ostream& out) {
    std::vector<Check> checks;
    auto record = [&](const std::string& name, bool pass, const std::string& detail) {
        checks.push_back({name, pass, detail});
    };

    const DiscreteDgp h0 = fixtures::h0_swap();
    const DiscreteDgp h1 = fixtures::h1_binary();
    const DiscreteDgp ds_null = fixtures::degenerate_s_null();
    const DiscreteDgp cpair = fixtures::constant_pair();

    // Identity P^2 Gamma_P = Psi(P) on every fixture.
    {
        double worst = 0.0;
        auto probe = [&](const DiscreteDgp& d) {
            worst = std::max(worst, std::abs(exact_gamma_mean(d).total - exact_psi(d)));
        };
        probe(h0);
        probe(h1);
        probe(ds_null);
        probe(cpair);
        for (std::uint64_t s = 0; s < 50; ++s) probe(fixtures::random_fixture(s));
        record("p2gamma-equals-psi", worst <= 1e-12, "max |P^2 Gamma - Psi| = " + std::to_string(worst));
    }

    // One-degeneracy of Gamma_0 on the H0 fixtures.
    {
        const double w1 = exact_gamma_mean(h0).rowwise.cwiseAbs().maxCoeff();
        const double w2 = exact_gamma_mean(ds_null).rowwise.cwiseAbs().maxCoeff();
        const double worst = std::max(w1, w2);
        record("h0-one-degeneracy", worst <= 1e-10, "max |row mean| = " + std::to_string(worst));
    }

    // ... which must fail under the alternative (the test is not vacuous).
    {
        const double w = exact_gamma_mean(h1).rowwise.cwiseAbs().maxCoeff();
        record("h1-row-mean-nonzero", w > 1e-6, "max |row mean| = " + std::to_string(w));
    }

    // Psi is nonnegative and vanishes exactly when the two laws coincide.
    {
        bool ok = exact_psi(h0) <= 1e-12;
        const double expected = 0.5 - 0.5 * std::exp(-1.0);
        ok = ok && std::abs(exact_psi(h1) - expected) <= 1e-15;
        double min_psi = 0.0;
        for (std::uint64_t s = 100; s < 1100; ++s) {
            min_psi = std::min(min_psi, exact_psi(fixtures::random_fixture(s)));
        }
        ok = ok && min_psi >= -1e-12;
        record("psi-nonnegative-zero-iff-h0", ok,
               "psi(h0) = " + std::to_string(exact_psi(h0)) +
                   ", min random psi = " + std::to_string(min_psi));
    }

    // Rank-one structure when S == 0 and R == 0.
    {
        const FunctionalEvaluations fe = ds_null.as_evaluations();
        double worst = 0.0;
        for (int i = 0; i < ds_null.m(); ++i) {
            for (int j = 0; j < ds_null.m(); ++j) {
                worst = std::max(worst, std::abs(gamma_combined(fe, i, j) -
                                                 2.0 * ds_null.dr(i, 0) * ds_null.dr(j, 0)));
            }
        }
        record("rank-one-when-r-and-s-vanish", worst <= 1e-12,
               "max |Gamma - 2 dr dr'| = " + std::to_string(worst));
    }

    // Degenerate first-order gradient for constant (r, s) with dr == ds.
    {
        const GammaMean gm = exact_gamma_mean(cpair);
        const double psi = exact_psi(cpair);
        double worst = 0.0;
        for (int i = 0; i < cpair.m(); ++i) {
            worst = std::max(worst, std::abs(2.0 * (gm.rowwise[i] - psi)));
        }
        record("constant-pair-gradient-vanishes", worst <= 1e-10,
               "max |D1| = " + std::to_string(worst));
    }

    // Remainder shrinks at fourth order under the null (zero linearization
    // remainder), second order otherwise.
    {
        const auto fam0 = fixtures::remainder_family(true);
        const double r1 = exact_remainder_bounds(fam0.base, fam0.perturbed(0.02)).rem_psi;
        const double r2 = exact_remainder_bounds(fam0.base, fam0.perturbed(0.04)).rem_psi;
        const double ratio = r2 / r1;
        record("remainder-fourth-order-under-h0", std::abs(ratio - 16.0) <= 1.6,
               "ratio = " + std::to_string(ratio));

        const auto fam1 = fixtures::remainder_family(false);
        const double a1 = exact_remainder_bounds(fam1.base, fam1.perturbed(0.02)).rem_psi;
        const double a2 = exact_remainder_bounds(fam1.base, fam1.perturbed(0.04)).rem_psi;
        const double ratio1 = a2 / a1;
        record("remainder-second-order-under-h1", std::abs(ratio1 - 4.0) <= 0.4,
               "ratio = " + std::to_string(ratio1));
    }

    // Identical perturbation of nothing leaves no remainder.
    {
        const auto fam = fixtures::remainder_family(false);
        const auto rb = exact_remainder_bounds(fam.base, fam.perturbed(0.0));
        record("zero-perturbation-zero-remainder",
               std::abs(rb.rem_psi) <= 1e-12 && rb.k0 <= 1e-12,
               "rem = " + std::to_string(rb.rem_psi));
    }

    bool all = true;
    for (const auto& c : checks) {
        out << (c.pass ? "PASS" : "FAIL") << "  " << c.name << "  (" << c.detail << ")\n";
        all = all && c.pass;
    }
    return all;
}

}  // namespace mmdeq
