#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "remest/config.hpp"
#include "remest/policies.hpp"

namespace remest::harness {

struct TraceRow {
    long t = 0;
    std::vector<int> aoi;
    double reward = 0.0;
    std::vector<uint8_t> successes;
};

// Deterministic policy evaluation over a long horizon.
struct EvalResult {
    double average_mse = 0.0;            // (1/steps) sum_t sum_n J_n(t)
    std::vector<double> mean_aoi;        // per sensor
    std::vector<double> success_rate;    // per sensor
    double cost_floor = 0.0;             // sum of Tr(p_bar), unreachable lower bound
    std::vector<TraceRow> trace;
};

double evaluate(const Policy& policy, const env::EnvConfig& env_cfg, long steps, uint64_t seed);
// setup, when given, runs on the freshly constructed environment before the
// first step (test hook, e.g. forcing successful receptions).
EvalResult evaluate_detailed(const Policy& policy, const env::EnvConfig& env_cfg, long steps,
                             uint64_t seed, bool keep_trace = true,
                             const std::function<void(env::Environment&)>& setup = {});

struct EvalReport {
    std::string status = "ok";  // "ok" or "diverged"
    std::string algorithm;
    int sensors = 0;
    int channels = 0;
    uint64_t seed = 0;
    std::string config_hash_hex;
    long eval_steps = 0;
    double average_mse = 0.0;
    double cost_floor = 0.0;
    std::vector<double> mean_aoi;
    std::vector<double> success_rate;
    double best_train_eval_mse = 0.0;
    // Published point of comparison for the (6, 3) scale; annotation only,
    // never a pass/fail gate.
    std::map<std::string, double> reference_mse;
    double wall_clock_sec = 0.0;
};

// Writes report.txt, learning_curve.csv, and eval_trace.csv (floats with 17
// significant digits).
void emit_report(const EvalReport& report, const std::vector<ppo::EpisodeStats>& curve,
                 const std::vector<TraceRow>& trace, const std::string& out_dir);

// Full pipeline: load config, build the environment, train (or instantiate)
// the configured policy, evaluate deterministically, write artifacts.
EvalReport run_experiment(const std::string& config_path, const std::string& out_dir);

// Quick oracle suite used by the CLI; returns the number of failures.
int run_selftest(std::ostream& out);

}  // namespace remest::harness
