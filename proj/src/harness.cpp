#include "remest/harness.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "remest/checkpoint.hpp"

namespace remest::harness {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string hash_hex(uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

void require_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

}  // namespace

double evaluate(const Policy& policy, const env::EnvConfig& env_cfg, long steps, uint64_t seed) {
    return evaluate_detailed(policy, env_cfg, steps, seed, /*keep_trace=*/false).average_mse;
}

EvalResult evaluate_detailed(const Policy& policy, const env::EnvConfig& env_cfg, long steps,
                             uint64_t seed, bool keep_trace,
                             const std::function<void(env::Environment&)>& setup) {
    if (steps < 1) throw std::invalid_argument("evaluate: steps must be positive");
    env::Environment environment(env_cfg, seed);
    if (setup) setup(environment);
    const int n = environment.num_sensors();

    EvalResult result;
    result.cost_floor = environment.cost_floor();
    result.mean_aoi.assign(n, 0.0);
    result.success_rate.assign(n, 0.0);
    if (keep_trace) result.trace.reserve(steps);

    double total_cost = 0.0;
    for (long t = 0; t < steps; ++t) {
        const codec::RealAction action = policy(environment.state(), environment.observe());
        const env::StepResult step = environment.step(action);
        total_cost += -step.reward;
        for (int i = 0; i < n; ++i) {
            result.mean_aoi[i] += step.next_state.aoi[i];
            result.success_rate[i] += step.successes[i];
        }
        if (keep_trace)
            result.trace.push_back({t + 1, step.next_state.aoi, step.reward, step.successes});
    }
    result.average_mse = total_cost / static_cast<double>(steps);
    for (int i = 0; i < n; ++i) {
        result.mean_aoi[i] /= static_cast<double>(steps);
        result.success_rate[i] /= static_cast<double>(steps);
    }
    return result;
}

void emit_report(const EvalReport& report, const std::vector<ppo::EpisodeStats>& curve,
                 const std::vector<TraceRow>& trace, const std::string& out_dir) {
    require_dir(out_dir);

    {
        auto out = open_out(out_dir + "/report.txt");
        out << "schema_version = 1\n";
        out << "status = " << report.status << "\n";
        out << "algorithm = " << report.algorithm << "\n";
        out << "sensors = " << report.sensors << "\n";
        out << "channels = " << report.channels << "\n";
        out << "seed = " << report.seed << "\n";
        out << "config_hash = " << report.config_hash_hex << "\n";
        out << "eval_steps = " << report.eval_steps << "\n";
        out << "average_mse = " << fmt_double(report.average_mse) << "\n";
        out << "cost_floor = " << fmt_double(report.cost_floor) << "\n";
        for (size_t i = 0; i < report.mean_aoi.size(); ++i)
            out << "mean_aoi_" << i << " = " << fmt_double(report.mean_aoi[i]) << "\n";
        for (size_t i = 0; i < report.success_rate.size(); ++i)
            out << "success_rate_" << i << " = " << fmt_double(report.success_rate[i]) << "\n";
        out << "best_train_eval_mse = " << fmt_double(report.best_train_eval_mse) << "\n";
        for (const auto& [name, value] : report.reference_mse)
            out << "reference_mse_" << name << " = " << fmt_double(value) << "\n";
        out << "wall_clock_sec = " << fmt_double(report.wall_clock_sec) << "\n";
    }
    {
        auto out = open_out(out_dir + "/learning_curve.csv");
        out << "episode,return,actor_loss,critic_loss,entropy\n";
        for (size_t e = 0; e < curve.size(); ++e)
            out << (e + 1) << ',' << fmt_double(curve[e].episode_return) << ','
                << fmt_double(curve[e].actor_loss) << ',' << fmt_double(curve[e].critic_loss)
                << ',' << fmt_double(curve[e].entropy) << "\n";
    }
    {
        auto out = open_out(out_dir + "/eval_trace.csv");
        out << "t";
        for (int i = 0; i < report.sensors; ++i) out << ",aoi_" << i;
        out << ",reward";
        for (int i = 0; i < report.sensors; ++i) out << ",zeta_" << i;
        out << "\n";
        for (const TraceRow& row : trace) {
            out << row.t;
            for (int a : row.aoi) out << ',' << a;
            out << ',' << fmt_double(row.reward);
            for (uint8_t z : row.successes) out << ',' << static_cast<int>(z);
            out << "\n";
        }
    }
}

EvalReport run_experiment(const std::string& config_path, const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = load_config(config_path);
    const env::EnvConfig env_cfg = build_env_config(cfg);
    require_dir(out_dir);

    EvalReport report;
    report.algorithm = cfg.algorithm;
    report.sensors = cfg.sensors;
    report.channels = cfg.channels;
    report.seed = cfg.seed;
    report.config_hash_hex = hash_hex(config_hash(cfg));
    report.eval_steps = cfg.eval_steps;
    if (cfg.sensors == 6 && cfg.channels == 3) {
        report.reference_mse = {{"dqn_oma", 46.6243},
                                {"ppo_naive", 39.0462},
                                {"ppo_binary", 38.0663}};
    }

    std::vector<ppo::EpisodeStats> curve;
    Policy policy;
    bool diverged = false;

    if (cfg.algorithm == "ppo-binary" || cfg.algorithm == "ppo-naive") {
        const auto kind = cfg.algorithm == "ppo-binary" ? codec::CodecKind::Binary
                                                        : codec::CodecKind::Naive;
        auto result = ppo::train(env_cfg, cfg.ppo, kind, cfg.resolved_env_seed(),
                                 cfg.resolved_agent_seed(), cfg.resolved_explore_seed());
        curve = std::move(result.curve);
        diverged = result.diverged;
        report.best_train_eval_mse = result.best_eval_mse;
        checkpoint::save_ppo_agent(result.best_agent, cfg.sensors, cfg.channels, cfg.algorithm,
                                   out_dir + "/checkpoint.bin");
        auto deployed = std::make_shared<ppo::Agent>(std::move(result.best_agent));
        policy = ppo_policy(std::move(deployed), cfg.sensors, cfg.channels, env_cfg.p_max);
    } else if (cfg.algorithm == "dqn-oma") {
        auto result = dqn::train_dqn(env_cfg, cfg.dqn, cfg.resolved_env_seed(),
                                     cfg.resolved_agent_seed(), cfg.resolved_explore_seed());
        curve = std::move(result.curve);
        diverged = result.diverged;
        report.best_train_eval_mse = result.best_eval_mse;
        checkpoint::save_dqn_agent(result.best_agent, cfg.sensors, cfg.channels,
                                   out_dir + "/checkpoint.bin");
        auto deployed = std::make_shared<dqn::Agent>(std::move(result.best_agent));
        policy = dqn_policy(std::move(deployed), cfg.sensors, env_cfg.p_max);
    } else if (cfg.algorithm == "random") {
        policy = random_policy(cfg.sensors, cfg.channels, env_cfg.p_max,
                               cfg.resolved_explore_seed());
        report.best_train_eval_mse = std::numeric_limits<double>::quiet_NaN();
    } else {  // round-robin
        policy = round_robin_policy(cfg.sensors, cfg.channels, env_cfg.p_max);
        report.best_train_eval_mse = std::numeric_limits<double>::quiet_NaN();
    }

    std::vector<TraceRow> trace;
    if (diverged) {
        report.status = "diverged";
        report.average_mse = std::numeric_limits<double>::quiet_NaN();
        report.cost_floor = env::Environment(env_cfg, cfg.resolved_eval_seed()).cost_floor();
        report.mean_aoi.assign(cfg.sensors, std::numeric_limits<double>::quiet_NaN());
        report.success_rate.assign(cfg.sensors, std::numeric_limits<double>::quiet_NaN());
    } else {
        EvalResult eval =
            evaluate_detailed(policy, env_cfg, cfg.eval_steps, cfg.resolved_eval_seed());
        report.average_mse = eval.average_mse;
        report.cost_floor = eval.cost_floor;
        report.mean_aoi = std::move(eval.mean_aoi);
        report.success_rate = std::move(eval.success_rate);
        trace = std::move(eval.trace);
    }

    report.wall_clock_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit_report(report, curve, trace, out_dir);
    return report;
}

int run_selftest(std::ostream& out) {
    int failures = 0;
    auto check = [&](const char* name, bool ok, const std::string& detail = "") {
        out << (ok ? "[ok]   " : "[FAIL] ") << name;
        if (!detail.empty()) out << " (" << detail << ")";
        out << "\n";
        if (!ok) ++failures;
    };

    {  // finite-blocklength anchor and monotonicity
        const link::CodeParams code{2.0, 200, 1.0};
        const double anchor = link::packet_error_prob(3.0, code);
        check("packet error anchor Q(0) = 1/2", std::abs(anchor - 0.5) <= 1e-9,
              fmt_double(anchor));
        bool monotone = true;
        double prev = 1.0;
        for (int i = 0; i < 1000; ++i) {
            const double eps =
                link::packet_error_prob(std::pow(10.0, -9.0 + 18.0 * i / 999.0), code);
            if (eps > prev + 1e-15) monotone = false;
            prev = eps;
        }
        check("packet error monotone in SNR", monotone);
    }
    {  // Riccati residuals and the scalar cost recursion
        Rng rng(12345);
        bool residual_ok = true;
        for (int i = 0; i < 20; ++i) {
            const auto p = plant::generate_random_plant(2, 2, 1.0, 1.3, rng);
            if (plant::solve_steady_state_covariance(p).residual > 1e-9) residual_ok = false;
        }
        check("riccati residual below 1e-9", residual_ok);

        plant::PlantModel scalar;
        scalar.A = Eigen::MatrixXd::Constant(1, 1, 1.2);
        scalar.C = Eigen::MatrixXd::Constant(1, 1, 1.0);
        scalar.W = Eigen::MatrixXd::Constant(1, 1, 1.0);
        scalar.V = Eigen::MatrixXd::Constant(1, 1, 1.0);
        const auto cov = plant::solve_steady_state_covariance(scalar);
        bool recursion_ok = true;
        for (int aoi = 1; aoi < 30; ++aoi) {
            const double lhs = plant::estimation_cost(scalar, cov, aoi + 1);
            const double rhs = 1.44 * plant::estimation_cost(scalar, cov, aoi) + 1.0;
            if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, std::abs(rhs))) recursion_ok = false;
        }
        check("scalar cost recursion", recursion_ok);
    }
    {  // codec round trip
        bool ok = true;
        for (int m = 1; m <= 64 && ok; ++m)
            for (int c = 0; c <= m; ++c)
                if (codec::decode_selection(codec::encode_selection(c, m), m) != c) ok = false;
        check("codec decode/encode identity, M <= 64", ok);
        check("power map endpoints",
              codec::decode_power(-1.0, 0.2) == 0.0 && codec::decode_power(1.0, 0.2) == 0.2);
    }
    {  // gradient fidelity on a small critic
        Rng rng(7);
        nn::Mlp net = nn::Mlp::random({5, 8, 1}, rng);
        Eigen::VectorXd x(5);
        for (int i = 0; i < 5; ++i) x(i) = rng.normal();
        auto loss = [&]() {
            const double v = nn::forward(net, x)(0);
            return 0.5 * v * v;
        };
        nn::ForwardCache cache;
        const double v = nn::forward(net, x, &cache)(0);
        std::vector<double> grad(net.param_count(), 0.0);
        nn::backward(net, cache, Eigen::VectorXd::Constant(1, v), grad);
        const auto report = nn::gradient_check(net.params, grad, loss);
        check("gradient check vs finite differences", report.max_rel_error <= 1e-6,
              fmt_double(report.max_rel_error));
    }
    {  // advantage recursion vs brute force
        Rng rng(21);
        ppo::Rollout ro;
        const int t_len = 9;
        ro.observations = Eigen::MatrixXd::Zero(1, t_len);
        ro.actions = Eigen::MatrixXd::Zero(1, t_len);
        ro.log_probs = Eigen::VectorXd::Zero(t_len);
        ro.entropies = Eigen::VectorXd::Zero(t_len);
        ro.rewards.resize(t_len);
        ro.values.resize(t_len);
        for (int t = 0; t < t_len; ++t) {
            ro.rewards(t) = rng.normal();
            ro.values(t) = rng.normal();
        }
        ro.bootstrap_value = rng.normal();
        const Eigen::VectorXd fast = ppo::compute_advantages(ro, 0.95, 0.9);
        bool ok = true;
        for (int t = 0; t < t_len; ++t) {
            double sum = 0.0;
            for (int k = t; k < t_len; ++k) {
                const double next = k + 1 < t_len ? ro.values(k + 1) : ro.bootstrap_value;
                sum += std::pow(0.95 * 0.9, k - t) *
                       (ro.rewards(k) + 0.95 * next - ro.values(k));
            }
            if (std::abs(sum - fast(t)) > 1e-12) ok = false;
        }
        check("advantage recursion equals double sum", ok);
    }

    out << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
    return failures;
}

}  // namespace remest::harness
