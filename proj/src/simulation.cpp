#include "mmdeq/simulation.hpp"

#include <cmath>
#include <ostream>

#include "mmdeq/inference.hpp"
#include "mmdeq/rng.hpp"

namespace mmdeq {

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::S1a: return "1a";
        case Scenario::S1b: return "1b";
        case Scenario::S1c: return "1c";
        case Scenario::S2: return "2";
        case Scenario::S3: return "3";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "1a") return Scenario::S1a;
    if (s == "1b") return Scenario::S1b;
    if (s == "1c") return Scenario::S1c;
    if (s == "2") return Scenario::S2;
    if (s == "3") return Scenario::S3;
    throw validation_error("SchemaMismatch", "unknown scenario '" + s + "'");
}

void ScenarioSpec::validate() const {
    if (n < 2) throw validation_error("TooFewObservations", "scenario sample size must be >= 2");
    if (replications < 1) {
        throw validation_error("SchemaMismatch", "replications must be >= 1");
    }
    if (scenario == Scenario::S3 && (signal_coords < 0 || signal_coords > 20)) {
        throw validation_error("SchemaMismatch", "signal_coords must lie in [0, 20]");
    }
    if (test != Example::Ex1_CATE && test != Example::Ex2_TwoPop) {
        throw validation_error("SchemaMismatch", "scenario tests use ex1 or ex2");
    }
    if (!(clip_b > 0.0)) throw validation_error("SchemaMismatch", "clip_b must be positive");
}

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Conditional mean from Table 1; variant in {'a','b','c'}, w is 5-dim.
double scenario1_mu(char variant, int a, const Eigen::VectorXd& w) {
    const double m = 0.2 * (w[0] * w[0] + w[1] - 2.0 * w[2] * w[3]);
    switch (variant) {
        case 'a': return m;
        case 'b': return m + 0.4 * (a * w[2] + (1 - a) * w[3]);
        case 'c': return m + 0.8 * a * w[2];
        default: throw validation_error("SchemaMismatch", "scenario-1 variant must be a, b, or c");
    }
}

// 5 * (B - alpha/(alpha+beta)) with B ~ Beta(alpha, beta); bounded by 5.
double scenario1_noise(RngStream& rng, int a, const Eigen::VectorXd& w) {
    const double alpha = 3.0 * expit(a * w[1]);
    const double beta = 2.0 * expit((1 - a) * w[0]);
    if (!(alpha > 1e-8 && beta > 1e-8)) {
        throw numeric_error("NonFiniteValue", "degenerate Beta shape parameter");
    }
    const double xi = rng.beta(alpha, beta) - alpha / (alpha + beta);
    const double noise = 5.0 * xi;
    if (!(std::abs(noise) <= 5.0)) {
        throw numeric_error("NonFiniteValue", "scenario-1 noise escaped its support");
    }
    return noise;
}

Schema scenario_schema(int w_dim, int y_dim) {
    Schema sc;
    for (int k = 0; k < w_dim; ++k) sc.w_cols.push_back("w" + std::to_string(k + 1));
    sc.a_col = "a";
    for (int k = 0; k < y_dim; ++k) {
        sc.y_cols.push_back(y_dim == 1 ? "y" : "y" + std::to_string(k + 1));
    }
    return sc;
}

}  // namespace

Dataset draw_scenario1(char variant, int n, RngSeed seed) {
    RngStream rng(seed);
    std::vector<Observation> obs(static_cast<size_t>(n));
    for (auto& o : obs) {
        o.w.resize(5);
        for (int k = 0; k < 5; ++k) o.w[k] = rng.normal();
        o.a = rng.bernoulli(0.5);
        o.y.resize(1);
        o.y[0] = scenario1_mu(variant, *o.a, o.w) + scenario1_noise(rng, *o.a, o.w);
    }
    return Dataset(std::move(obs), scenario_schema(5, 1));
}

Dataset draw_scenario2(double beta, int n, RngSeed seed) {
    RngStream rng(seed);
    std::vector<Observation> obs(static_cast<size_t>(n));
    for (auto& o : obs) {
        o.w.resize(2);
        o.w[0] = rng.bernoulli(0.5);
        o.w[1] = rng.normal();
        o.a = rng.bernoulli(0.5);
        o.y.resize(1);
        o.y[0] = 1.0 + beta * (*o.a) * (1.0 + o.w[1] * o.w[1]) + o.w[0] + o.w[1] + rng.normal();
    }
    return Dataset(std::move(obs), scenario_schema(2, 1));
}

Dataset draw_scenario3(int signal_coords, int n, RngSeed seed) {
    if (signal_coords < 0 || signal_coords > 20) {
        throw validation_error("SchemaMismatch", "signal_coords must lie in [0, 20]");
    }
    RngStream rng(seed);
    std::vector<Observation> obs(static_cast<size_t>(n));
    for (auto& o : obs) {
        o.w.resize(5);
        for (int k = 0; k < 5; ++k) o.w[k] = rng.normal();
        o.a = rng.bernoulli(0.5);
        o.y.resize(20);
        for (int k = 0; k < 20; ++k) {
            const char variant = k < signal_coords ? 'c' : 'a';
            o.y[k] = (scenario1_mu(variant, *o.a, o.w) + scenario1_noise(rng, *o.a, o.w)) / 20.0;
        }
    }
    return Dataset(std::move(obs), scenario_schema(5, 20));
}

Dataset draw_scenario(const ScenarioSpec& spec, RngSeed seed) {
    switch (spec.scenario) {
        case Scenario::S1a: return draw_scenario1('a', spec.n, seed);
        case Scenario::S1b: return draw_scenario1('b', spec.n, seed);
        case Scenario::S1c: return draw_scenario1('c', spec.n, seed);
        case Scenario::S2: return draw_scenario2(spec.beta, spec.n, seed);
        case Scenario::S3: return draw_scenario3(spec.signal_coords, spec.n, seed);
    }
    throw validation_error("SchemaMismatch", "unknown scenario");
}

void RejectionTable::write_csv(std::ostream& out) const {
    out << "scenario,n,method,alpha,rate,mc_se,reps\n";
    for (const auto& r : rows) {
        out << r.scenario << ',' << r.n << ',' << r.method << ',' << r.alpha << ',' << r.rate
            << ',' << r.mc_se << ',' << r.replications << '\n';
    }
}

nlohmann::json RejectionTable::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        arr.push_back({{"scenario", r.scenario},
                       {"n", r.n},
                       {"method", r.method},
                       {"alpha", r.alpha},
                       {"rate", r.rate},
                       {"mc_se", r.mc_se},
                       {"reps", r.replications},
                       {"errored", r.errored}});
    }
    return arr;
}

RejectionRow run_experiment(const ScenarioSpec& spec, const TestConfig& config, int threads,
                            const std::function<void(int, int)>& progress) {
    spec.validate();
    config.validate();

    ExampleSpec es;
    es.example = spec.test;
    es.outcome_model = spec.outcome_model;
    es.propensity_model = spec.propensity_model;
    es.clip_b = spec.clip_b;

    int rejects = 0, errored = 0;
    for (int rep = 0; rep < spec.replications; ++rep) {
        const RngSeed rs = spec.seed.derived(static_cast<std::uint64_t>(rep));
        try {
            const Dataset data = draw_scenario(spec, rs);
            TestConfig cfg = config;
            cfg.seed = rs.derived(0x7E57u);
            FunctionalEvaluations fe;
            if (config.sample_splitting == Splitting::TwoFold) {
                fe = split_fit(es, data, rs.derived(0x51u)).evals;
            } else {
                fe = evaluate_example(es, data, rs.derived(0x51u));
            }
            if (run_test(fe, cfg, threads).reject) ++rejects;
        } catch (const Error&) {
            ++errored;
        }
        if (progress) progress(rep + 1, spec.replications);
    }

    RejectionRow row;
    row.scenario = to_string(spec.scenario);
    row.n = spec.n;
    row.method = to_string(config.calibration);
    row.alpha = config.alpha;
    row.replications = spec.replications - errored;
    row.errored = errored;
    row.rate = row.replications > 0 ? static_cast<double>(rejects) / row.replications : 0.0;
    row.mc_se = row.replications > 0
                    ? std::sqrt(row.rate * (1.0 - row.rate) / row.replications)
                    : 0.0;
    return row;
}

}  // namespace mmdeq
