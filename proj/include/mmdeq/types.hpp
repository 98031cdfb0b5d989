#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mmdeq {

// Error taxonomy. The `kind` drives CLI exit codes: validation errors exit 2,
// numeric failures exit 3.
enum class ErrorKind { Validation, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), kind_(kind), code_(std::move(code)) {}
    ErrorKind kind() const { return kind_; }
    const std::string& code() const { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

inline Error validation_error(const std::string& code, const std::string& what) {
    return Error(ErrorKind::Validation, code, what);
}
inline Error numeric_error(const std::string& code, const std::string& what) {
    return Error(ErrorKind::Numeric, code, what);
}

// One observation O = (W, A, Y). A is absent for data structures without a
// binary label (Examples 3 and 4); Y is a d-vector with d = 1 in the
// univariate examples.
struct Observation {
    Eigen::VectorXd w;
    std::optional<int> a;   // 0 or 1 when present
    Eigen::VectorXd y;
};

// Column-role mapping used when ingesting CSV files.
struct Schema {
    std::vector<std::string> w_cols;
    std::optional<std::string> a_col;
    std::vector<std::string> y_cols;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<Observation> obs, Schema schema);

    int n() const { return static_cast<int>(obs_.size()); }
    int w_dim() const { return obs_.empty() ? 0 : static_cast<int>(obs_.front().w.size()); }
    int y_dim() const { return obs_.empty() ? 0 : static_cast<int>(obs_.front().y.size()); }
    bool has_treatment() const { return !obs_.empty() && obs_.front().a.has_value(); }

    const Observation& operator[](int i) const { return obs_[static_cast<size_t>(i)]; }
    const std::vector<Observation>& observations() const { return obs_; }
    const Schema& schema() const { return schema_; }

    // Dense views used by the fitting code.
    Eigen::MatrixXd w_matrix() const;
    Eigen::MatrixXd y_matrix() const;
    Eigen::VectorXi a_vector() const;   // throws if no treatment column

    Dataset subset(const std::vector<int>& idx) const;

private:
    std::vector<Observation> obs_;
    Schema schema_;
};

// Seed plus stream id. Distinct (seed, stream) pairs yield independent
// streams; the same pair always reproduces the same draws.
struct RngSeed {
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;

    // Deterministically derives an independent stream, e.g. one per
    // Monte Carlo replication.
    RngSeed derived(std::uint64_t salt) const;
};

enum class Calibration { DegenerateS, GramEigen, Chebyshev };
enum class Splitting { None, TwoFold };

std::string to_string(Calibration c);
std::string to_string(Splitting s);
Calibration calibration_from_string(const std::string& s);
Splitting splitting_from_string(const std::string& s);

struct TestConfig {
    double alpha = 0.05;
    Calibration calibration = Calibration::GramEigen;
    std::optional<int> eigen_count;    // nullopt = default rule (all for n <= 125, else 200)
    int mc_draws = 100000;
    double bandwidth = 1.0;            // applied as a 1/bandwidth multiplier on R and S
    Splitting sample_splitting = Splitting::None;
    RngSeed seed;

    void validate() const;
    // Number of eigenvalues to keep for a sample of size n.
    int resolve_eigen_count(int n) const;
};

}  // namespace mmdeq
