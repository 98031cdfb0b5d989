#include "mmdeq/types.hpp"

#include <algorithm>
#include <cmath>

namespace mmdeq {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

Dataset::Dataset(std::vector<Observation> obs, Schema schema)
    : obs_(std::move(obs)), schema_(std::move(schema)) {
    if (obs_.size() < 2) {
        throw validation_error("TooFewObservations", "need n >= 2 observations");
    }
    const auto wq = obs_.front().w.size();
    const auto yd = obs_.front().y.size();
    const bool has_a = obs_.front().a.has_value();
    if (yd < 1) throw validation_error("SchemaMismatch", "outcome dimension must be >= 1");
    for (const auto& o : obs_) {
        if (o.w.size() != wq || o.y.size() != yd || o.a.has_value() != has_a) {
            throw validation_error("SchemaMismatch", "inhomogeneous observation dimensions");
        }
        if (!o.w.allFinite() || !o.y.allFinite()) {
            throw validation_error("NonFiniteValue", "non-finite covariate or outcome");
        }
        if (o.a && *o.a != 0 && *o.a != 1) {
            throw validation_error("NonBinaryTreatment", "treatment must be 0 or 1");
        }
    }
}

Eigen::MatrixXd Dataset::w_matrix() const {
    Eigen::MatrixXd m(n(), w_dim());
    for (int i = 0; i < n(); ++i) m.row(i) = obs_[static_cast<size_t>(i)].w.transpose();
    return m;
}

Eigen::MatrixXd Dataset::y_matrix() const {
    Eigen::MatrixXd m(n(), y_dim());
    for (int i = 0; i < n(); ++i) m.row(i) = obs_[static_cast<size_t>(i)].y.transpose();
    return m;
}

Eigen::VectorXi Dataset::a_vector() const {
    if (!has_treatment()) {
        throw validation_error("MissingTreatmentColumn", "dataset has no A column");
    }
    Eigen::VectorXi a(n());
    for (int i = 0; i < n(); ++i) a[i] = *obs_[static_cast<size_t>(i)].a;
    return a;
}

Dataset Dataset::subset(const std::vector<int>& idx) const {
    std::vector<Observation> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(obs_[static_cast<size_t>(i)]);
    return Dataset(std::move(out), schema_);
}

RngSeed RngSeed::derived(std::uint64_t salt) const {
    RngSeed d;
    d.seed = splitmix64(seed ^ splitmix64(salt));
    d.stream = splitmix64(stream + 0x632be59bd9b4e019ULL + salt);
    return d;
}

std::string to_string(Calibration c) {
    switch (c) {
        case Calibration::DegenerateS: return "degenerate-s";
        case Calibration::GramEigen: return "gram-eigen";
        case Calibration::Chebyshev: return "chebyshev";
    }
    return "?";
}

std::string to_string(Splitting s) {
    return s == Splitting::None ? "none" : "two-fold";
}

Calibration calibration_from_string(const std::string& s) {
    if (s == "degenerate-s") return Calibration::DegenerateS;
    if (s == "gram-eigen") return Calibration::GramEigen;
    if (s == "chebyshev") return Calibration::Chebyshev;
    throw validation_error("SchemaMismatch", "unknown calibration method '" + s + "'");
}

Splitting splitting_from_string(const std::string& s) {
    if (s == "none") return Splitting::None;
    if (s == "two-fold") return Splitting::TwoFold;
    throw validation_error("SchemaMismatch", "unknown splitting mode '" + s + "'");
}

void TestConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw validation_error("SchemaMismatch", "alpha must lie in (0,1)");
    }
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
        throw validation_error("SchemaMismatch", "bandwidth must be positive");
    }
    if (mc_draws < 1) {
        throw validation_error("SchemaMismatch", "mc_draws must be positive");
    }
    if (eigen_count && *eigen_count < 1) {
        throw validation_error("SchemaMismatch", "eigen_count must be positive");
    }
}

int TestConfig::resolve_eigen_count(int n) const {
    if (eigen_count) return std::min(*eigen_count, n);
    return n <= 125 ? n : 200;
}

}  // namespace mmdeq
