#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmdeq/nuisance.hpp"
#include "mmdeq/types.hpp"

namespace mmdeq {

enum class Scenario { S1a, S1b, S1c, S2, S3 };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

struct ScenarioSpec {
    Scenario scenario = Scenario::S1a;
    double beta = 0.0;          // scenario 2
    int signal_coords = 0;      // scenario 3, in [0, 20]
    int n = 125;
    Example test = Example::Ex1_CATE;   // Ex1 pointwise-zero or Ex2 equal-in-distribution
    int replications = 1000;
    RngSeed seed;
    Regressor outcome_model = Regressor::nadaraya_watson(1.0);
    Propensity propensity_model = Propensity::known_constant(0.5);
    double clip_b = 1.0;

    void validate() const;
};

Dataset draw_scenario1(char variant, int n, RngSeed seed);
Dataset draw_scenario2(double beta, int n, RngSeed seed);
Dataset draw_scenario3(int signal_coords, int n, RngSeed seed);
Dataset draw_scenario(const ScenarioSpec& spec, RngSeed seed);

struct RejectionRow {
    std::string scenario;
    int n = 0;
    std::string method;
    double alpha = 0.05;
    double rate = 0.0;
    double mc_se = 0.0;
    int replications = 0;
    int errored = 0;   // replications excluded due to errors
};

struct RejectionTable {
    std::vector<RejectionRow> rows;
    void write_csv(std::ostream& out) const;
    nlohmann::json to_json() const;
};

// One Monte Carlo experiment: draw, fit, test, aggregate. Deterministic given
// the spec's seed; replication r uses seed.derived(r).
RejectionRow run_experiment(const ScenarioSpec& spec, const TestConfig& config,
                            int threads = 1,
                            const std::function<void(int, int)>& progress = {});

}  // namespace mmdeq
