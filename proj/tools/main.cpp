#include <CLI11.hpp>

#include <atomic>
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <thread>
#include <vector>

#include "remest/checkpoint.hpp"
#include "remest/harness.hpp"

namespace {

using namespace remest;

void print_summary(const harness::EvalReport& report) {
    std::cout << "algorithm:    " << report.algorithm << "\n"
              << "status:       " << report.status << "\n"
              << "sensors:      " << report.sensors << " / channels: " << report.channels << "\n"
              << "average MSE:  " << report.average_mse << " (floor " << report.cost_floor
              << ") over " << report.eval_steps << " steps\n"
              << "wall clock:   " << report.wall_clock_sec << " s\n";
    for (const auto& [name, value] : report.reference_mse)
        std::cout << "reference " << name << ": " << value << "\n";
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    const harness::EvalReport report = harness::run_experiment(config_path, out_dir);
    print_summary(report);
    return report.status == "ok" ? 0 : 1;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
             const std::string& out_dir) {
    const harness::ExperimentConfig cfg = harness::load_config(config_path);
    const checkpoint::LoadedCheckpoint loaded = checkpoint::load_checkpoint(checkpoint_path);
    if (loaded.sensors != cfg.sensors || loaded.channels != cfg.channels)
        throw std::runtime_error("checkpoint was trained for a different system scale");

    const env::EnvConfig env_cfg = harness::build_env_config(cfg);
    Policy policy;
    if (loaded.ppo_agent) {
        auto agent = std::make_shared<ppo::Agent>(*loaded.ppo_agent);
        policy = ppo_policy(std::move(agent), cfg.sensors, cfg.channels, env_cfg.p_max);
    } else {
        auto agent = std::make_shared<dqn::Agent>(*loaded.dqn_agent);
        policy = dqn_policy(std::move(agent), cfg.sensors, env_cfg.p_max);
    }

    harness::EvalResult eval = harness::evaluate_detailed(policy, env_cfg, cfg.eval_steps,
                                                          cfg.resolved_eval_seed());
    harness::EvalReport report;
    report.algorithm = loaded.algorithm;
    report.sensors = cfg.sensors;
    report.channels = cfg.channels;
    report.seed = cfg.seed;
    report.config_hash_hex = "n/a (checkpoint evaluation)";
    report.eval_steps = cfg.eval_steps;
    report.average_mse = eval.average_mse;
    report.cost_floor = eval.cost_floor;
    report.mean_aoi = eval.mean_aoi;
    report.success_rate = eval.success_rate;
    report.best_train_eval_mse = std::numeric_limits<double>::quiet_NaN();
    harness::emit_report(report, {}, eval.trace, out_dir);
    print_summary(report);
    return 0;
}

int cmd_sweep(const std::string& config_dir, const std::string& out_dir, int jobs) {
    std::vector<std::filesystem::path> configs;
    for (const auto& entry : std::filesystem::directory_iterator(config_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            configs.push_back(entry.path());
    std::sort(configs.begin(), configs.end());
    if (configs.empty()) {
        std::cerr << "no .json configs found in " << config_dir << "\n";
        return 1;
    }

    std::atomic<size_t> next{0};
    std::atomic<int> failures{0};
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= configs.size()) return;
            const std::string stem = configs[i].stem().string();
            try {
                const auto report =
                    harness::run_experiment(configs[i].string(), out_dir + "/" + stem);
                std::cout << stem << ": " << report.status << ", average MSE "
                          << report.average_mse << "\n";
                if (report.status != "ok") ++failures;
            } catch (const std::exception& e) {
                std::cerr << stem << ": error: " << e.what() << "\n";
                ++failures;
            }
        }
    };

    const int pool = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (int i = 0; i < pool; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return failures.load() == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NOMA remote-estimation simulator and policy trainer"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, config_dir;
    std::string out_dir = "out";
    int jobs = 1;

    auto* run = app.add_subcommand("run", "train and evaluate one experiment config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("-o,--out", out_dir, "output directory");

    auto* eval = app.add_subcommand("eval", "evaluate a saved checkpoint against a config");
    eval->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
    eval->add_option("config", config_path, "experiment config (JSON)")->required();
    eval->add_option("-o,--out", out_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep", "run every config in a directory");
    sweep->add_option("config-dir", config_dir, "directory of JSON configs")->required();
    sweep->add_option("-o,--out", out_dir, "output directory");
    sweep->add_option("-j,--jobs", jobs, "parallel experiments");

    auto* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir);
        if (eval->parsed()) return cmd_eval(checkpoint_path, config_path, out_dir);
        if (sweep->parsed()) return cmd_sweep(config_dir, out_dir, jobs);
        if (selftest->parsed()) return harness::run_selftest(std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
