#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmdeq/csv.hpp"
#include "mmdeq/inference.hpp"
#include "mmdeq/nuisance.hpp"
#include "mmdeq/oracle.hpp"
#include "mmdeq/parallel.hpp"
#include "mmdeq/simulation.hpp"

namespace {

using nlohmann::json;

struct Options {
    std::string config_path;
    std::string data_path;
    std::string out_path;
    std::optional<double> alpha;
    std::optional<std::string> method;
    std::optional<std::string> example;
    std::optional<double> bandwidth;
    std::optional<std::string> split;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::optional<std::string> scenario;
    std::optional<int> n;
    std::optional<int> reps;
    std::optional<double> beta;
    std::optional<int> signal_coords;
    std::optional<std::string> outcome;       // ols | nw:<h> | knn:<k>
    std::optional<std::string> propensity;    // known:<p> | logistic
    std::optional<double> clip_b;
    std::optional<int> ex4_coord;
    std::optional<double> ex4_p;
    std::vector<std::string> w_cols;
    std::optional<std::string> a_col;
    std::vector<std::string> y_cols;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw mmdeq::validation_error("SchemaMismatch", "cannot read config " + path);
    return json::parse(in);
}

mmdeq::Regressor parse_outcome(const std::string& s) {
    if (s == "ols") return mmdeq::Regressor::ols();
    if (s.rfind("nw:", 0) == 0) return mmdeq::Regressor::nadaraya_watson(std::stod(s.substr(3)));
    if (s.rfind("knn:", 0) == 0) return mmdeq::Regressor::knearest(std::stoi(s.substr(4)));
    throw mmdeq::validation_error("SchemaMismatch",
                                  "outcome model must be ols, nw:<h>, or knn:<k>");
}

mmdeq::Propensity parse_propensity(const std::string& s) {
    if (s == "logistic") return mmdeq::Propensity::logistic();
    if (s.rfind("known:", 0) == 0) {
        return mmdeq::Propensity::known_constant(std::stod(s.substr(6)));
    }
    throw mmdeq::validation_error("SchemaMismatch",
                                  "propensity model must be logistic or known:<p>");
}

// Flags beat the config file, which beats built-in defaults.
mmdeq::TestConfig effective_test_config(const json& cfg, const Options& opt,
                                        std::optional<double> default_bandwidth = {}) {
    mmdeq::TestConfig tc;
    if (default_bandwidth) tc.bandwidth = *default_bandwidth;
    if (cfg.contains("alpha")) tc.alpha = cfg["alpha"].get<double>();
    if (cfg.contains("method")) {
        tc.calibration = mmdeq::calibration_from_string(cfg["method"].get<std::string>());
    }
    if (cfg.contains("eigen_count")) tc.eigen_count = cfg["eigen_count"].get<int>();
    if (cfg.contains("mc_draws")) tc.mc_draws = cfg["mc_draws"].get<int>();
    if (cfg.contains("bandwidth")) tc.bandwidth = cfg["bandwidth"].get<double>();
    if (cfg.contains("split")) {
        tc.sample_splitting = mmdeq::splitting_from_string(cfg["split"].get<std::string>());
    }
    if (cfg.contains("seed")) tc.seed.seed = cfg["seed"].get<std::uint64_t>();
    if (cfg.contains("stream")) tc.seed.stream = cfg["stream"].get<std::uint64_t>();
    if (const char* env = std::getenv("MMD_EQD_SEED"); env && !cfg.contains("seed")) {
        tc.seed.seed = std::strtoull(env, nullptr, 10);
    }
    if (opt.alpha) tc.alpha = *opt.alpha;
    if (opt.method) tc.calibration = mmdeq::calibration_from_string(*opt.method);
    if (opt.bandwidth) tc.bandwidth = *opt.bandwidth;
    if (opt.split) tc.sample_splitting = mmdeq::splitting_from_string(*opt.split);
    if (opt.seed) tc.seed.seed = *opt.seed;
    tc.validate();
    return tc;
}

mmdeq::ExampleSpec effective_example_spec(const json& cfg, const Options& opt) {
    mmdeq::ExampleSpec es;
    if (cfg.contains("example")) {
        es.example = mmdeq::example_from_string(cfg["example"].get<std::string>());
    }
    if (cfg.contains("outcome_model")) {
        es.outcome_model = parse_outcome(cfg["outcome_model"].get<std::string>());
    }
    if (cfg.contains("propensity_model")) {
        es.propensity_model = parse_propensity(cfg["propensity_model"].get<std::string>());
    }
    if (cfg.contains("clip_b")) es.clip_b = cfg["clip_b"].get<double>();
    if (cfg.contains("ex4_coord")) es.ex4_coord = cfg["ex4_coord"].get<int>();
    if (cfg.contains("ex4_p")) es.ex4_p = cfg["ex4_p"].get<double>();
    if (opt.example) es.example = mmdeq::example_from_string(*opt.example);
    if (opt.outcome) es.outcome_model = parse_outcome(*opt.outcome);
    if (opt.propensity) es.propensity_model = parse_propensity(*opt.propensity);
    if (opt.clip_b) es.clip_b = *opt.clip_b;
    if (opt.ex4_coord) es.ex4_coord = *opt.ex4_coord;
    if (opt.ex4_p) es.ex4_p = *opt.ex4_p;
    return es;
}

mmdeq::Schema effective_schema(const json& cfg, const Options& opt,
                               const mmdeq::CsvTable& raw) {
    mmdeq::Schema sc;
    if (cfg.contains("schema")) {
        const json& s = cfg["schema"];
        if (s.contains("w_cols")) sc.w_cols = s["w_cols"].get<std::vector<std::string>>();
        if (s.contains("a_col")) sc.a_col = s["a_col"].get<std::string>();
        if (s.contains("y_cols")) sc.y_cols = s["y_cols"].get<std::vector<std::string>>();
    }
    if (!opt.w_cols.empty()) sc.w_cols = opt.w_cols;
    if (opt.a_col) sc.a_col = *opt.a_col;
    if (!opt.y_cols.empty()) sc.y_cols = opt.y_cols;
    if (sc.w_cols.empty() && sc.y_cols.empty()) {
        // Infer roles from names: w* covariates, y* outcomes, a treatment.
        for (const auto& h : raw.header) {
            if (h == "a") {
                sc.a_col = h;
            } else if (!h.empty() && h.front() == 'w') {
                sc.w_cols.push_back(h);
            } else if (!h.empty() && h.front() == 'y') {
                sc.y_cols.push_back(h);
            }
        }
    }
    return sc;
}

json config_json(const mmdeq::TestConfig& tc, const mmdeq::ExampleSpec* es) {
    json j;
    j["alpha"] = tc.alpha;
    j["method"] = mmdeq::to_string(tc.calibration);
    if (tc.eigen_count) j["eigen_count"] = *tc.eigen_count;
    j["mc_draws"] = tc.mc_draws;
    j["bandwidth"] = tc.bandwidth;
    j["split"] = mmdeq::to_string(tc.sample_splitting);
    j["seed"] = tc.seed.seed;
    j["stream"] = tc.seed.stream;
    if (es) {
        j["example"] = mmdeq::to_string(es->example);
        j["clip_b"] = es->clip_b;
        if (es->example == mmdeq::Example::Ex4_VarImportance) {
            j["ex4_coord"] = es->ex4_coord;
            j["ex4_p"] = es->ex4_p;
        }
    }
    return j;
}

int cmd_test(const Options& opt) {
    const json cfg = load_config(opt.config_path);
    const mmdeq::TestConfig tc = effective_test_config(cfg, opt);
    const mmdeq::ExampleSpec es = effective_example_spec(cfg, opt);

    const mmdeq::CsvTable raw = mmdeq::read_csv_file(opt.data_path);
    const mmdeq::Schema schema = effective_schema(cfg, opt, raw);
    const mmdeq::Dataset data = mmdeq::validate_dataset(raw, schema);
    es.validate(data);

    mmdeq::FunctionalEvaluations fe;
    json fit_summary;
    if (tc.sample_splitting == mmdeq::Splitting::TwoFold) {
        mmdeq::SplitEvaluations se = mmdeq::split_fit(es, data, tc.seed);
        fe = std::move(se.evals);
        fit_summary = se.fit.summary();
    } else {
        mmdeq::FittedNuisance fit = mmdeq::fit_nuisance(es, data);
        fe = mmdeq::evaluate_with(fit, data, tc.seed);
        fit_summary = fit.summary();
    }
    const int threads = opt.threads > 0 ? opt.threads : mmdeq::default_threads();
    const mmdeq::TestResult res = mmdeq::run_test(fe, tc, threads);

    json report = res.to_json();
    report["config"] = config_json(tc, &es);
    report["nuisance"] = fit_summary;

    std::string summary = "reject H0: ";
    summary += res.reject ? "yes" : "no";
    summary += " (n psi_n = " + std::to_string(res.n_psi_n) +
               ", cutoff = " + std::to_string(res.cutoff) + ")";
    if (opt.out_path.empty()) {
        std::cout << report.dump(2) << '\n';
        std::cerr << summary << '\n';
    } else {
        std::ofstream out(opt.out_path);
        if (!out) throw mmdeq::validation_error("SchemaMismatch", "cannot write " + opt.out_path);
        out << report.dump(2) << '\n';
        std::cout << summary << '\n';
    }
    return 0;
}

int cmd_simulate(const Options& opt) {
    const json cfg = load_config(opt.config_path);

    mmdeq::ScenarioSpec spec;
    if (cfg.contains("scenario")) {
        spec.scenario = mmdeq::scenario_from_string(cfg["scenario"].get<std::string>());
    }
    if (opt.scenario) spec.scenario = mmdeq::scenario_from_string(*opt.scenario);
    if (cfg.contains("n")) spec.n = cfg["n"].get<int>();
    if (opt.n) spec.n = *opt.n;
    if (cfg.contains("reps")) spec.replications = cfg["reps"].get<int>();
    if (opt.reps) spec.replications = *opt.reps;
    if (cfg.contains("beta")) spec.beta = cfg["beta"].get<double>();
    if (opt.beta) spec.beta = *opt.beta;
    if (spec.scenario == mmdeq::Scenario::S2 && std::abs(spec.beta) > 0.5) {
        std::cerr << "warning: scenario-2 beta outside [-0.5, 0.5]\n";
    }
    if (cfg.contains("signal_coords")) spec.signal_coords = cfg["signal_coords"].get<int>();
    if (opt.signal_coords) spec.signal_coords = *opt.signal_coords;

    const mmdeq::ExampleSpec es = effective_example_spec(cfg, opt);
    spec.test = es.example == mmdeq::Example::Ex2_TwoPop ? mmdeq::Example::Ex2_TwoPop
                                                         : mmdeq::Example::Ex1_CATE;
    spec.outcome_model = es.outcome_model;
    spec.propensity_model = es.propensity_model;
    spec.clip_b = es.clip_b;

    // Scenario 2 defaults to the wider kernel unless a bandwidth was chosen.
    std::optional<double> default_bw;
    if (spec.scenario == mmdeq::Scenario::S2) default_bw = 5.0;
    const mmdeq::TestConfig tc = effective_test_config(cfg, opt, default_bw);
    spec.seed = tc.seed;

    const int threads = opt.threads > 0 ? opt.threads : mmdeq::default_threads();
    int last_pct = -1;
    mmdeq::RejectionRow row = mmdeq::run_experiment(
        spec, tc, threads, [&](int done, int total) {
            const int pct = 100 * done / total;
            if (pct / 10 > last_pct / 10) {
                std::cerr << "simulate: " << pct << "% (" << done << "/" << total << ")\n";
                last_pct = pct;
            }
        });

    mmdeq::RejectionTable table;
    table.rows.push_back(row);
    if (opt.out_path.empty()) {
        table.write_csv(std::cout);
    } else {
        std::ofstream csv(opt.out_path);
        if (!csv) throw mmdeq::validation_error("SchemaMismatch", "cannot write " + opt.out_path);
        table.write_csv(csv);
        std::ofstream js(opt.out_path + ".json");
        json j;
        j["rows"] = table.to_json();
        j["config"] = config_json(tc, &es);
        js << j.dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonparametric equality-in-distribution test"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON config file");
        sub->add_option("--out", opt.out_path, "output path");
        sub->add_option("--alpha", [&](const std::vector<std::string>& v) {
            opt.alpha = std::stod(v[0]);
            return true;
        }, "test level");
        sub->add_option("--method", [&](const std::vector<std::string>& v) {
            opt.method = v[0];
            return true;
        }, "degenerate-s | gram-eigen | chebyshev");
        sub->add_option("--example", [&](const std::vector<std::string>& v) {
            opt.example = v[0];
            return true;
        }, "ex1 | ex2 | ex3 | ex4");
        sub->add_option("--bandwidth", [&](const std::vector<std::string>& v) {
            opt.bandwidth = std::stod(v[0]);
            return true;
        }, "kernel bandwidth");
        sub->add_option("--split", [&](const std::vector<std::string>& v) {
            opt.split = v[0];
            return true;
        }, "none | two-fold");
        sub->add_option("--seed", [&](const std::vector<std::string>& v) {
            opt.seed = std::stoull(v[0]);
            return true;
        }, "RNG seed (env MMD_EQD_SEED)");
        sub->add_option("--threads", opt.threads, "worker threads (0 = auto)");
        sub->add_option("--outcome", [&](const std::vector<std::string>& v) {
            opt.outcome = v[0];
            return true;
        }, "ols | nw:<h> | knn:<k>");
        sub->add_option("--propensity", [&](const std::vector<std::string>& v) {
            opt.propensity = v[0];
            return true;
        }, "known:<p> | logistic");
        sub->add_option("--clip-b", [&](const std::vector<std::string>& v) {
            opt.clip_b = std::stod(v[0]);
            return true;
        }, "range bound for r and s");
    };

    CLI::App* test = app.add_subcommand("test", "run the test on a CSV dataset");
    add_common(test);
    test->add_option("--data", opt.data_path, "input CSV")->required();
    test->add_option("--w-cols", opt.w_cols, "covariate column names")->delimiter(',');
    test->add_option("--a-col", [&](const std::vector<std::string>& v) {
        opt.a_col = v[0];
        return true;
    }, "treatment column name");
    test->add_option("--y-cols", opt.y_cols, "outcome column names")->delimiter(',');
    test->add_option("--ex4-coord", [&](const std::vector<std::string>& v) {
        opt.ex4_coord = std::stoi(v[0]);
        return true;
    }, "dropped covariate index (ex4)");
    test->add_option("--ex4-p", [&](const std::vector<std::string>& v) {
        opt.ex4_p = std::stod(v[0]);
        return true;
    }, "artificial label probability (ex4)");

    CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo rejection rates");
    add_common(sim);
    sim->add_option("--scenario", [&](const std::vector<std::string>& v) {
        opt.scenario = v[0];
        return true;
    }, "1a | 1b | 1c | 2 | 3");
    sim->add_option("--n", [&](const std::vector<std::string>& v) {
        opt.n = std::stoi(v[0]);
        return true;
    }, "sample size");
    sim->add_option("--reps", [&](const std::vector<std::string>& v) {
        opt.reps = std::stoi(v[0]);
        return true;
    }, "replications");
    sim->add_option("--beta", [&](const std::vector<std::string>& v) {
        opt.beta = std::stod(v[0]);
        return true;
    }, "scenario-2 effect size");
    sim->add_option("--signal-coords", [&](const std::vector<std::string>& v) {
        opt.signal_coords = std::stoi(v[0]);
        return true;
    }, "scenario-3 signal coordinates");

    app.add_subcommand("oracle-check", "run the exact-identity self-checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (test->parsed()) return cmd_test(opt);
        if (sim->parsed()) return cmd_simulate(opt);
        return mmdeq::run_oracle_checks(std::cout) ? 0 : 1;
    } catch (const mmdeq::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == mmdeq::ErrorKind::Validation ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
