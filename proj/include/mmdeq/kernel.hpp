#pragma once

#include <iosfwd>

#include <Eigen/Core>

#include "mmdeq/types.hpp"

namespace mmdeq {

// Per-observation evaluations of the two functionals and their conditional
// gradients, rows indexed by observation. All four matrices are n x d.
struct FunctionalEvaluations {
    Eigen::MatrixXd r;
    Eigen::MatrixXd s;
    Eigen::MatrixXd dr;
    Eigen::MatrixXd ds;
    double bound_b = 1.0;

    int n() const { return static_cast<int>(r.rows()); }
    int dim() const { return static_cast<int>(r.cols()); }

    // Checks finiteness, dimension agreement and |r|, |s| <= bound_b.
    void validate() const;

    // Kernel bandwidth h is realized by rescaling the mappings by 1/h;
    // the gradients scale along with them.
    FunctionalEvaluations rescaled(double bandwidth) const;
};

// Second-order-gradient kernel for one (T, U) pair of functionals:
//   [ 2 (t1-u2)'(du2-dt1) + 1 - 2 dt1' { 2 (t1-u2)(t1-u2)' - I } du2 ]
//     * exp(-||t1-u2||^2)
// For d = 1 this reduces to the scalar form with bracket
//   2 (t-u)(du-dt) + 1 - (4 (t-u)^2 - 2) dt du.
double gamma_tu(const Eigen::RowVectorXd& t1, const Eigen::RowVectorXd& u2,
                const Eigen::RowVectorXd& dt1, const Eigen::RowVectorXd& du2);

// Combined kernel Gamma = Gamma^{RR} - Gamma^{RS} - Gamma^{SR} + Gamma^{SS}
// evaluated at observations i and j.
double gamma_combined(const FunctionalEvaluations& fe, int i, int j);

// Full n x n kernel matrix. The diagonal is computed and stored; U-statistics
// downstream skip it.
struct GammaMatrix {
    Eigen::MatrixXd values;
    int n() const { return static_cast<int>(values.rows()); }
};

GammaMatrix gamma_matrix(const FunctionalEvaluations& fe, int threads = 1);

// Double-centered Gram matrix: G_ij = Gamma_ij - row mean - column mean
// + grand mean. Rows and columns each sum to zero.
Eigen::MatrixXd centered_gram(const GammaMatrix& g);

// Debug dump: n as a 64-bit header followed by row-major doubles.
void dump_gamma(std::ostream& out, const GammaMatrix& g);
GammaMatrix load_gamma(std::istream& in);

}  // namespace mmdeq
