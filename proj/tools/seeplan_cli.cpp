// seeplan: plan, evaluate and sweep secure power allocation policies.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "seeplan/seeplan.hpp"

namespace {

using namespace seeplan;

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> episodes;
    std::optional<std::string> mode;
    std::optional<std::string> algorithms;
    std::optional<unsigned> workers;
};

void add_common(CLI::App* cmd, Overrides& o, bool out_required) {
    cmd->add_option("--config", o.config, "JSON experiment configuration (defaults apply when omitted)");
    auto* out = cmd->add_option("--out", o.out, "Output path");
    if (out_required) out->required();
    cmd->add_option("--seed", o.seed, "Master seed for Monte Carlo evaluation");
    cmd->add_option("--episodes", o.episodes, "Monte Carlo episodes")->check(CLI::PositiveNumber);
    cmd->add_option("--mode", o.mode, "Evaluation mode")->check(CLI::IsMember({"exact", "mc"}));
    cmd->add_option("--algorithms", o.algorithms, "Comma-separated subset of fhjpa,ga,ihjpa");
    cmd->add_option("--workers", o.workers, "Threads for Monte Carlo episodes")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const Overrides& o) {
    ExperimentConfig c = o.config.empty() ? parse_config("{}") : load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.episodes) c.episodes = *o.episodes;
    if (o.mode) c.mode = parse_mode(*o.mode);
    if (o.workers) c.workers = *o.workers;
    if (o.algorithms) {
        c.algorithms.clear();
        std::istringstream in(*o.algorithms);
        std::string name;
        while (std::getline(in, name, ',')) c.algorithms.push_back(parse_algorithm(name));
    }
    if (!o.out.empty()) c.output = o.out;
    validate(c);
    return c;
}

void print_metrics(std::ostream& out, const Metrics& m, EvalMode mode) {
    out << "mode," << to_string(mode) << '\n';
    out << "avg_see_bits_per_joule," << format_double(m.avg_see) << '\n';
    out << "total_secure_bits," << format_double(m.total_secure_bits) << '\n';
    if (m.avg_see_stderr) {
        out << "avg_see_stderr," << format_double(*m.avg_see_stderr) << '\n';
        out << "total_secure_bits_stderr," << format_double(*m.total_secure_bits_stderr) << '\n';
        out << "episodes," << m.episodes << '\n';
    }
}

int cmd_plan(const Overrides& o) {
    const ExperimentConfig c = resolve(o);
    if (c.algorithms.size() != 1) {
        throw ConfigError("plan needs exactly one algorithm (use --algorithms fhjpa|ga|ihjpa)");
    }
    const Mdp mdp = build_mdp(c.params);
    const AnyPolicy policy = plan(c.algorithms.front(), mdp, c.params);
    save_policy(o.out, policy);
    const PlanStats& stats = stats_of(policy);
    std::cerr << to_string(c.algorithms.front()) << ": " << mdp.space.size() << " states, " << stats.backups
              << " backups, " << stats.iterations << " iterations, " << stats.plan_seconds << " s\n";
    return 0;
}

int cmd_evaluate(const Overrides& o, const std::string& policy_path, const std::string& trace_path) {
    const ExperimentConfig c = resolve(o);
    const AnyPolicy policy = load_policy(policy_path);
    const Mdp mdp = build_mdp(c.params);
    const std::size_t states = std::visit([](const auto& p) { return p.state_count(); }, policy);
    if (states != mdp.space.size()) {
        throw ShapeError("policy covers " + std::to_string(states) + " states but the configuration has " +
                         std::to_string(mdp.space.size()));
    }
    const Metrics m = c.mode == EvalMode::Exact
                          ? exact_evaluate(policy, mdp.kernel, mdp.rewards, c.params.horizon,
                                           mdp.space.encode(c.params.initial_state))
                          : monte_carlo_evaluate(policy, c.params, c.episodes, c.seed, c.workers);
    if (o.out.empty()) {
        print_metrics(std::cout, m, c.mode);
    } else {
        std::ofstream out(o.out, std::ios::binary);
        if (!out) throw IoError("cannot open '" + o.out + "' for writing");
        print_metrics(out, m, c.mode);
    }
    if (!trace_path.empty()) {
        std::ofstream out(trace_path, std::ios::binary);
        if (!out) throw IoError("cannot open '" + trace_path + "' for writing");
        const auto trace =
            std::visit([&](const auto& p) { return run_episode(p, c.params, episode_seed(c.seed, 0)); }, policy);
        write_trace(out, trace);
    }
    return 0;
}

int cmd_sweep(const Overrides& o) {
    const ExperimentConfig c = resolve(o);
    const auto rows = run_experiment(c);
    write_results(rows, c.output);
    std::cerr << "wrote " << rows.size() << " rows to " << c.output << '\n';
    return 0;
}

int cmd_timing(const Overrides& o) {
    const ExperimentConfig c = resolve(o);
    const std::string text = format_timing_report(compare_timing(c));
    if (o.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(o.out, std::ios::binary);
        if (!out) throw IoError("cannot open '" + o.out + "' for writing");
        out << text;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Secure energy-efficient power allocation planner"};
    app.require_subcommand(1);

    Overrides plan_o, eval_o, sweep_o, timing_o;
    std::string policy_path;
    std::string trace_path;

    auto* plan_cmd = app.add_subcommand("plan", "Plan one algorithm and write its policy table");
    add_common(plan_cmd, plan_o, true);

    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a policy file under a configuration");
    add_common(eval_cmd, eval_o, false);
    eval_cmd->add_option("--policy", policy_path, "Policy file written by 'plan'")->required();
    eval_cmd->add_option("--trace", trace_path, "Also dump one seeded episode trace here");

    auto* sweep_cmd = app.add_subcommand("sweep", "Run the configured parameter sweep and write results");
    add_common(sweep_cmd, sweep_o, false);

    auto* timing_cmd = app.add_subcommand("timing", "Report planning cost per algorithm and horizon");
    add_common(timing_cmd, timing_o, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*plan_cmd) return cmd_plan(plan_o);
        if (*eval_cmd) return cmd_evaluate(eval_o, policy_path, trace_path);
        if (*sweep_cmd) return cmd_sweep(sweep_o);
        if (*timing_cmd) return cmd_timing(timing_o);
    } catch (const seeplan::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
