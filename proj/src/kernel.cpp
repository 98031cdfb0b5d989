#include "mmdeq/kernel.hpp"

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>

#include "mmdeq/parallel.hpp"

namespace mmdeq {

void FunctionalEvaluations::validate() const {
    const auto rows = r.rows();
    const auto cols = r.cols();
    if (rows < 2) throw validation_error("TooFewObservations", "need n >= 2 evaluations");
    if (s.rows() != rows || dr.rows() != rows || ds.rows() != rows ||
        s.cols() != cols || dr.cols() != cols || ds.cols() != cols) {
        throw numeric_error("DimensionMismatch", "evaluation matrices disagree in shape");
    }
    if (!r.allFinite() || !s.allFinite() || !dr.allFinite() || !ds.allFinite()) {
        throw numeric_error("NonFiniteValue", "non-finite functional evaluation");
    }
    const double tol = bound_b * (1.0 + 1e-12);
    if (r.cwiseAbs().maxCoeff() > tol || s.cwiseAbs().maxCoeff() > tol) {
        throw numeric_error("NonFiniteValue", "functional evaluations exceed the declared range bound");
    }
}

FunctionalEvaluations FunctionalEvaluations::rescaled(double bandwidth) const {
    if (!(bandwidth > 0.0)) throw validation_error("SchemaMismatch", "bandwidth must be positive");
    if (bandwidth == 1.0) return *this;
    FunctionalEvaluations out;
    const double c = 1.0 / bandwidth;
    out.r = c * r;
    out.s = c * s;
    out.dr = c * dr;
    out.ds = c * ds;
    out.bound_b = c * bound_b;
    return out;
}

namespace {

// Scalar form, d = 1.
inline double gamma_tu1(double t, double u, double dt, double du) {
    const double diff = t - u;
    const double bracket = 2.0 * diff * (du - dt) + 1.0 - (4.0 * diff * diff - 2.0) * dt * du;
    return bracket * std::exp(-diff * diff);
}

// General d, raw pointers to rows of length d.
inline double gamma_tud(const double* t, const double* u, const double* dt,
                        const double* du, int d) {
    double sq = 0.0, cross = 0.0, dtdiff = 0.0, dudiff = 0.0, dtdu = 0.0;
    for (int k = 0; k < d; ++k) {
        const double diff = t[k] - u[k];
        sq += diff * diff;
        cross += diff * (du[k] - dt[k]);
        dtdiff += dt[k] * diff;
        dudiff += du[k] * diff;
        dtdu += dt[k] * du[k];
    }
    const double bracket = 2.0 * cross + 1.0 - 2.0 * (2.0 * dtdiff * dudiff - dtdu);
    return bracket * std::exp(-sq);
}

}  // namespace

double gamma_tu(const Eigen::RowVectorXd& t1, const Eigen::RowVectorXd& u2,
                const Eigen::RowVectorXd& dt1, const Eigen::RowVectorXd& du2) {
    const auto d = t1.size();
    if (u2.size() != d || dt1.size() != d || du2.size() != d) {
        throw numeric_error("DimensionMismatch", "gamma_tu arguments differ in dimension");
    }
    return gamma_tud(t1.data(), u2.data(), dt1.data(), du2.data(), static_cast<int>(d));
}

double gamma_combined(const FunctionalEvaluations& fe, int i, int j) {
    if (i < 0 || j < 0 || i >= fe.n() || j >= fe.n()) {
        throw numeric_error("IndexOutOfRange", "gamma_combined index outside [0, n)");
    }
    const int d = fe.dim();
    if (d == 1) {
        const double ri = fe.r(i, 0), rj = fe.r(j, 0), si = fe.s(i, 0), sj = fe.s(j, 0);
        const double dri = fe.dr(i, 0), drj = fe.dr(j, 0), dsi = fe.ds(i, 0), dsj = fe.ds(j, 0);
        return gamma_tu1(ri, rj, dri, drj) - gamma_tu1(ri, sj, dri, dsj) -
               gamma_tu1(si, rj, dsi, drj) + gamma_tu1(si, sj, dsi, dsj);
    }
    // Row-major copies so the pointer kernel sees contiguous coordinates.
    Eigen::RowVectorXd ri = fe.r.row(i), rj = fe.r.row(j), si = fe.s.row(i), sj = fe.s.row(j);
    Eigen::RowVectorXd dri = fe.dr.row(i), drj = fe.dr.row(j), dsi = fe.ds.row(i), dsj = fe.ds.row(j);
    return gamma_tud(ri.data(), rj.data(), dri.data(), drj.data(), d) -
           gamma_tud(ri.data(), sj.data(), dri.data(), dsj.data(), d) -
           gamma_tud(si.data(), rj.data(), dsi.data(), drj.data(), d) +
           gamma_tud(si.data(), sj.data(), dsi.data(), dsj.data(), d);
}

GammaMatrix gamma_matrix(const FunctionalEvaluations& fe, int threads) {
    fe.validate();
    const int n = fe.n();
    const int d = fe.dim();
    GammaMatrix g;
    g.values.resize(n, n);

    if (d == 1) {
        const double* r = fe.r.data();
        const double* s = fe.s.data();
        const double* dr = fe.dr.data();
        const double* ds = fe.ds.data();
        parallel_for_blocks(n, threads, [&](int lo, int hi) {
            for (int i = lo; i < hi; ++i) {
                for (int j = i; j < n; ++j) {
                    const double v = gamma_tu1(r[i], r[j], dr[i], dr[j]) -
                                     gamma_tu1(r[i], s[j], dr[i], ds[j]) -
                                     gamma_tu1(s[i], r[j], ds[i], dr[j]) +
                                     gamma_tu1(s[i], s[j], ds[i], ds[j]);
                    g.values(i, j) = v;
                    g.values(j, i) = v;
                }
            }
        });
        return g;
    }

    // Row-major staging buffers for the d-dimensional inner products.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = fe.r, S = fe.s,
                                                                           DR = fe.dr, DS = fe.ds;
    parallel_for_blocks(n, threads, [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            const double *ri = R.row(i).data(), *si = S.row(i).data();
            const double *dri = DR.row(i).data(), *dsi = DS.row(i).data();
            for (int j = i; j < n; ++j) {
                const double *rj = R.row(j).data(), *sj = S.row(j).data();
                const double *drj = DR.row(j).data(), *dsj = DS.row(j).data();
                const double v = gamma_tud(ri, rj, dri, drj, d) - gamma_tud(ri, sj, dri, dsj, d) -
                                 gamma_tud(si, rj, dsi, drj, d) + gamma_tud(si, sj, dsi, dsj, d);
                g.values(i, j) = v;
                g.values(j, i) = v;
            }
        }
    });
    return g;
}

Eigen::MatrixXd centered_gram(const GammaMatrix& g) {
    const auto n = g.values.rows();
    Eigen::VectorXd row_mean = g.values.rowwise().mean();
    Eigen::RowVectorXd col_mean = g.values.colwise().mean();
    const double grand = row_mean.mean();
    Eigen::MatrixXd out = g.values;
    out.colwise() -= row_mean;
    out.rowwise() -= col_mean;
    out.array() += grand;
    (void)n;
    return out;
}

void dump_gamma(std::ostream& out, const GammaMatrix& g) {
    const std::uint64_t n = static_cast<std::uint64_t>(g.values.rows());
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
            const double v = g.values(i, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
}

GammaMatrix load_gamma(std::istream& in) {
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    GammaMatrix g;
    g.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
        for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
            double v = 0;
            in.read(reinterpret_cast<char*>(&v), sizeof v);
            g.values(i, j) = v;
        }
    }
    if (!in) throw numeric_error("NonFiniteValue", "truncated gamma dump");
    return g;
}

}  // namespace mmdeq
