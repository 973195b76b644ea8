// ammlens command line: synthetic data and the analysis stages.
//
// Exit codes: 0 ok, 2 invalid input or configuration, 1 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ammlens/pipeline.hpp"
#include "ammlens/synthetic.hpp"

namespace {

using namespace ammlens;

// Flags that override the config file when given.
struct Flags {
    std::string config, events, pools, tokens, calendar, out;
    std::vector<std::string> windows;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::int64_t> min_txn_count, min_pools_per_token;
    std::optional<double> tvl_threshold;
    std::optional<std::int64_t> origin_threshold, sender_threshold, bridge_min_count;
    std::optional<std::int64_t> min_txns, max_txns;
    std::vector<int> dims;
    std::optional<int> epochs;
    std::optional<int> k_min, k_max, k;
    std::optional<double> z_threshold;
    std::optional<int> window_days;
    std::string focus;
    std::vector<std::string> baseline;
};

void add_run_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "JSON run configuration");
    app->add_option("--events", f.events, "events JSONL");
    app->add_option("--pools", f.pools, "pool metadata JSONL");
    app->add_option("--tokens", f.tokens, "token classes JSON");
    app->add_option("--calendar", f.calendar, "market calendar CSV");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--window", f.windows, "LABEL:YYYY-MM-DD:YYYY-MM-DD (repeatable)");
    app->add_option("--seed", f.seed);
    app->add_option("--workers", f.workers, "training threads; 1 is deterministic");
    app->add_option("--min-txn-count", f.min_txn_count);
    app->add_option("--min-pools-per-token", f.min_pools_per_token);
    app->add_option("--tvl-threshold", f.tvl_threshold);
    app->add_option("--origin-threshold", f.origin_threshold);
    app->add_option("--sender-threshold", f.sender_threshold);
    app->add_option("--bridge-min-count", f.bridge_min_count);
    app->add_option("--min-txns", f.min_txns, "LT swap lower bound");
    app->add_option("--max-txns", f.max_txns, "LT swap upper bound");
    app->add_option("--dim", f.dims, "embedding dimension (repeatable)");
    app->add_option("--epochs", f.epochs);
    app->add_option("--k-min", f.k_min);
    app->add_option("--k-max", f.k_max);
    app->add_option("--k", f.k, "fixed cluster count instead of the elbow");
    app->add_option("--z-threshold", f.z_threshold);
    app->add_option("--window-days", f.window_days, "sliding cryptoness window");
    app->add_option("--focus", f.focus, "opChange focus window");
    app->add_option("--baseline", f.baseline, "opChange baseline window (repeatable)");
}

RunConfig build_config(const Flags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    auto set = [](auto& field, const auto& v) {
        if (v) field = *v;
    };
    if (!f.events.empty()) c.events = f.events;
    if (!f.pools.empty()) c.pools = f.pools;
    if (!f.tokens.empty()) c.tokens = f.tokens;
    if (!f.calendar.empty()) c.calendar = f.calendar;
    if (!f.out.empty()) c.out = f.out;
    if (!f.windows.empty()) {
        c.selection.windows.clear();
        for (const auto& w : f.windows) c.selection.windows.push_back(parse_window(w));
    }
    set(c.seed, f.seed);
    set(c.workers, f.workers);
    set(c.selection.min_txn_count, f.min_txn_count);
    set(c.selection.min_pools_per_token, f.min_pools_per_token);
    set(c.selection.tvl_threshold, f.tvl_threshold);
    set(c.interconnect.origin_threshold, f.origin_threshold);
    set(c.interconnect.sender_threshold, f.sender_threshold);
    set(c.interconnect.bridge_min_count, f.bridge_min_count);
    set(c.embed.min_txns, f.min_txns);
    set(c.embed.max_txns, f.max_txns);
    if (!f.dims.empty()) c.embed.dims = f.dims;
    set(c.embed.train.epochs, f.epochs);
    set(c.cluster.k_min, f.k_min);
    set(c.cluster.k_max, f.k_max);
    if (f.k) c.cluster.k = *f.k;
    set(c.cryptoness.z_threshold, f.z_threshold);
    set(c.cryptoness.window_days, f.window_days);
    if (!f.focus.empty()) c.cryptoness.focus = parse_window(f.focus);
    if (!f.baseline.empty()) {
        c.cryptoness.baseline.clear();
        for (const auto& w : f.baseline) c.cryptoness.baseline.push_back(parse_window(w));
    }
    return c;
}

int run_synth(const std::string& spec_path, const std::string& out, const std::optional<std::uint64_t>& seed,
              const std::optional<int>& days) {
    SyntheticSpec spec = default_synthetic_spec();
    if (!spec_path.empty()) {
        std::ifstream in(spec_path);
        if (!in) throw ValidationError("cannot read spec " + spec_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("spec " + spec_path + " is not valid JSON: " + e.what());
        }
        spec = synthetic_spec_from_json(j);
    }
    if (seed) spec.seed = *seed;
    if (days) spec.days = *days;
    const auto world = generate_synthetic(spec);
    write_synthetic(world, out);
    std::ofstream cfg(std::filesystem::path(out) / "run.json", std::ios::binary);
    if (!cfg) throw RuntimeError("cannot write run.json in " + out);
    cfg << to_json(synthetic_run_config(world.spec)).dump(2) << '\n';
    std::cout << "wrote " << world.log.swaps.size() << " swaps, " << world.log.liquidity.size()
              << " liquidity events, " << world.log.pools.size() << " pools to " << out << '\n';
    return 0;
}

int run_stages(const Flags& f, const std::set<Stage>& stages) {
    const auto rep = run_pipeline(build_config(f), stages);
    for (const auto& [stage, entry] : rep.manifest.at("stages").items()) {
        if (!stages.count(parse_stage(stage))) continue;
        std::cout << stage << ": " << entry.at("files").size() << " files";
        for (const auto& warning : entry.at("warnings")) std::cerr << "warning: " << warning.get<std::string>() << '\n';
        std::cout << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AMM pool and liquidity-taker analytics"};
    app.require_subcommand(1);

    std::string spec_path, synth_out;
    std::optional<std::uint64_t> synth_seed;
    std::optional<int> synth_days;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with planted ground truth");
    synth->add_option("--spec", spec_path, "synthetic spec JSON (defaults built in)");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_seed);
    synth->add_option("--days", synth_days);

    Flags flags;
    std::vector<std::pair<CLI::App*, std::set<Stage>>> stage_cmds;
    for (Stage s : kStageOrder) {
        auto* cmd = app.add_subcommand(to_string(s), std::string("run the ") + to_string(s) + " stage");
        add_run_flags(cmd, flags);
        stage_cmds.push_back({cmd, {s}});
    }
    auto* all = app.add_subcommand("run-all", "run every stage in dependency order");
    add_run_flags(all, flags);
    stage_cmds.push_back({all, all_stages()});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*synth) return run_synth(spec_path, synth_out, synth_seed, synth_days);
        for (const auto& [cmd, stages] : stage_cmds)
            if (*cmd) return run_stages(flags, stages);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failed: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
