#pragma once

// Stage runner. Every stage reads its upstream artifacts from the output
// directory, so stages can be run one at a time or all together.
//
//   select -> interconnect
//          -> embed -> cluster
//          -> poolfeat
//          -> cryptoness

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ammlens/clustering.hpp"
#include "ammlens/cryptoness.hpp"
#include "ammlens/event_model.hpp"
#include "ammlens/graph.hpp"
#include "ammlens/graph2vec.hpp"
#include "ammlens/interconnect.hpp"
#include "ammlens/lt_profile.hpp"
#include "ammlens/pool_features.hpp"
#include "ammlens/selection.hpp"
#include "ammlens/synthetic.hpp"
#include "ammlens/transaction_graph.hpp"

namespace ammlens {

namespace fs = std::filesystem;

enum class Stage { select, interconnect, embed, cluster, poolfeat, cryptoness };

inline constexpr std::array<Stage, 6> kStageOrder{Stage::select,   Stage::interconnect,
                                                  Stage::embed,    Stage::cluster,
                                                  Stage::poolfeat, Stage::cryptoness};

inline const char* to_string(Stage s) noexcept {
    switch (s) {
        case Stage::select: return "select";
        case Stage::interconnect: return "interconnect";
        case Stage::embed: return "embed";
        case Stage::cluster: return "cluster";
        case Stage::poolfeat: return "poolfeat";
        case Stage::cryptoness: return "cryptoness";
    }
    return "?";
}

inline Stage parse_stage(const std::string& s) {
    for (Stage st : kStageOrder)
        if (s == to_string(st)) return st;
    throw ValidationError("unknown stage '" + s + "'");
}

inline std::vector<Stage> stage_dependencies(Stage s) {
    switch (s) {
        case Stage::select: return {};
        case Stage::cluster: return {Stage::embed};
        default: return {Stage::select};
    }
}

struct InterconnectConfig {
    std::vector<std::int64_t> sweep{0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000};
    std::int64_t origin_threshold = 2000;
    std::int64_t sender_threshold = 100;
    std::int64_t bridge_min_count = 800;
};

struct EmbedConfig {
    std::int64_t min_txns = 60;
    std::int64_t max_txns = 15000;
    std::vector<int> dims{16};
    TrainConfig train;
};

struct ClusterConfig {
    int k_min = 1;
    int k_max = 8;
    int restarts = 5;
    double elbow_gain = 0.10;
    std::optional<int> k;  // overrides the elbow
};

struct PoolFeatConfig {
    std::vector<KernelType> kernels{KernelType::linear, KernelType::rbf, KernelType::cosine};
    int dims = 3;
    std::optional<double> rbf_gamma;
    bool include_fee_tier = false;
};

struct CryptonessConfig {
    double z_threshold = 3.0;
    int window_days = 30;
    int step_days = 1;
    int bins = 5;
    double xi_floor = 0.3;
    std::optional<TimeWindow> focus;
    std::vector<TimeWindow> baseline;
};

struct RunConfig {
    fs::path events, pools, tokens, calendar;
    fs::path out;
    SelectionConfig selection;
    InterconnectConfig interconnect;
    EmbedConfig embed;
    ClusterConfig cluster;
    PoolFeatConfig poolfeat;
    CryptonessConfig cryptoness;
    std::uint64_t seed = 1;
    int workers = 1;

    void validate() const {
        if (events.empty() || pools.empty()) throw ValidationError("events and pools paths are required");
        if (out.empty()) throw ValidationError("an output directory is required");
        if (selection.windows.empty()) throw ValidationError("at least one window is required");
        selection.validate();
        std::set<std::string> labels;
        for (const auto& w : selection.windows) {
            if (w.label.empty() ||
                !std::all_of(w.label.begin(), w.label.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
                }))
                throw ValidationError("window label '" + w.label + "' must be [A-Za-z0-9_-]+");
            if (!labels.insert(w.label).second)
                throw ValidationError("duplicate window label " + w.label);
        }
        if (workers < 1) throw ValidationError("workers must be >= 1");
        if (!std::is_sorted(interconnect.sweep.begin(), interconnect.sweep.end()))
            throw ValidationError("sweep thresholds must be ascending");
        if (interconnect.origin_threshold < 0 || interconnect.sender_threshold < 0 ||
            interconnect.bridge_min_count < 0)
            throw ValidationError("interconnect thresholds must be non-negative");
        if (embed.min_txns < 2 || embed.max_txns < embed.min_txns)
            throw ValidationError("LT swap bounds must satisfy 2 <= min <= max");
        if (embed.dims.empty()) throw ValidationError("at least one embedding dimension is required");
        for (int d : embed.dims)
            if (d < 1) throw ValidationError("embedding dimensions must be positive");
        embed.train.validate();
        if (cluster.k_min < 1 || cluster.k_max < cluster.k_min + 2)
            throw ValidationError("k range must hold at least 3 values starting at >= 1");
        if (cluster.restarts < 1) throw ValidationError("restarts must be >= 1");
        if (cluster.k && *cluster.k < 1) throw ValidationError("k must be >= 1");
        if (poolfeat.dims < 1) throw ValidationError("PCA dims must be >= 1");
        if (cryptoness.window_days < 1 || cryptoness.step_days < 1 || cryptoness.bins < 2)
            throw ValidationError("invalid cryptoness window/bins");
        if (cryptoness.focus && cryptoness.baseline.empty())
            throw ValidationError("opChange focus window needs baseline windows");
    }
};

// ---- config (de)serialization ----

inline nlohmann::json to_json(const RunConfig& c, bool with_out = true) {
    std::vector<std::string> windows, baseline, kernels;
    for (const auto& w : c.selection.windows) windows.push_back(format_window(w));
    for (const auto& w : c.cryptoness.baseline) baseline.push_back(format_window(w));
    for (auto k : c.poolfeat.kernels) kernels.push_back(to_string(k));
    const auto& t = c.embed.train;
    nlohmann::json j{
        {"events", c.events.generic_string()},
        {"pools", c.pools.generic_string()},
        {"tokens", c.tokens.generic_string()},
        {"calendar", c.calendar.generic_string()},
        {"windows", windows},
        {"seed", c.seed},
        {"workers", c.workers},
        {"selection",
         {{"min_txn_count", c.selection.min_txn_count},
          {"min_pools_per_token", c.selection.min_pools_per_token},
          {"tvl_threshold", c.selection.tvl_threshold}}},
        {"interconnect",
         {{"sweep", c.interconnect.sweep},
          {"origin_threshold", c.interconnect.origin_threshold},
          {"sender_threshold", c.interconnect.sender_threshold},
          {"bridge_min_count", c.interconnect.bridge_min_count}}},
        {"embed",
         {{"min_txns", c.embed.min_txns},
          {"max_txns", c.embed.max_txns},
          {"dims", c.embed.dims},
          {"epochs", t.epochs},
          {"initial_lr", t.initial_lr},
          {"min_feature_count", t.min_feature_count},
          {"downsample_rate", t.downsample_rate},
          {"negatives", t.negatives_per_positive}}},
        {"cluster",
         {{"k_min", c.cluster.k_min},
          {"k_max", c.cluster.k_max},
          {"restarts", c.cluster.restarts},
          {"elbow_gain", c.cluster.elbow_gain},
          {"k", c.cluster.k ? nlohmann::json(*c.cluster.k) : nlohmann::json(nullptr)}}},
        {"poolfeat",
         {{"kernels", kernels},
          {"dims", c.poolfeat.dims},
          {"rbf_gamma", c.poolfeat.rbf_gamma ? nlohmann::json(*c.poolfeat.rbf_gamma) : nlohmann::json(nullptr)},
          {"include_fee_tier", c.poolfeat.include_fee_tier}}},
        {"cryptoness",
         {{"z_threshold", c.cryptoness.z_threshold},
          {"window_days", c.cryptoness.window_days},
          {"step_days", c.cryptoness.step_days},
          {"bins", c.cryptoness.bins},
          {"xi_floor", c.cryptoness.xi_floor},
          {"focus", c.cryptoness.focus ? nlohmann::json(format_window(*c.cryptoness.focus)) : nlohmann::json(nullptr)},
          {"baseline", baseline}}}};
    if (with_out) j["out"] = c.out.generic_string();
    return j;
}

inline KernelType parse_kernel(const std::string& s) {
    if (s == "linear") return KernelType::linear;
    if (s == "rbf") return KernelType::rbf;
    if (s == "cosine") return KernelType::cosine;
    throw ValidationError("unknown kernel '" + s + "'");
}

// Missing keys keep their defaults. Relative paths resolve against `base`.
inline void apply_config_json(RunConfig& c, const nlohmann::json& j, const fs::path& base = {}) {
    try {
        auto path = [&](const char* key, fs::path& field) {
            if (!j.contains(key)) return;
            fs::path p = j.at(key).get<std::string>();
            field = p.empty() || p.is_absolute() || base.empty() ? p : base / p;
        };
        path("events", c.events);
        path("pools", c.pools);
        path("tokens", c.tokens);
        path("calendar", c.calendar);
        path("out", c.out);
        if (j.contains("windows")) {
            c.selection.windows.clear();
            for (const auto& w : j.at("windows")) c.selection.windows.push_back(parse_window(w.get<std::string>()));
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("workers")) c.workers = j.at("workers").get<int>();
        auto opt = [](const nlohmann::json& o, const char* key, auto& field) {
            if (o.contains(key) && !o.at(key).is_null())
                field = o.at(key).get<std::decay_t<decltype(field)>>();
        };
        if (j.contains("selection")) {
            const auto& s = j.at("selection");
            opt(s, "min_txn_count", c.selection.min_txn_count);
            opt(s, "min_pools_per_token", c.selection.min_pools_per_token);
            opt(s, "tvl_threshold", c.selection.tvl_threshold);
        }
        if (j.contains("interconnect")) {
            const auto& s = j.at("interconnect");
            opt(s, "sweep", c.interconnect.sweep);
            opt(s, "origin_threshold", c.interconnect.origin_threshold);
            opt(s, "sender_threshold", c.interconnect.sender_threshold);
            opt(s, "bridge_min_count", c.interconnect.bridge_min_count);
        }
        if (j.contains("embed")) {
            const auto& s = j.at("embed");
            opt(s, "min_txns", c.embed.min_txns);
            opt(s, "max_txns", c.embed.max_txns);
            opt(s, "dims", c.embed.dims);
            opt(s, "epochs", c.embed.train.epochs);
            opt(s, "initial_lr", c.embed.train.initial_lr);
            opt(s, "min_feature_count", c.embed.train.min_feature_count);
            opt(s, "downsample_rate", c.embed.train.downsample_rate);
            opt(s, "negatives", c.embed.train.negatives_per_positive);
        }
        if (j.contains("cluster")) {
            const auto& s = j.at("cluster");
            opt(s, "k_min", c.cluster.k_min);
            opt(s, "k_max", c.cluster.k_max);
            opt(s, "restarts", c.cluster.restarts);
            opt(s, "elbow_gain", c.cluster.elbow_gain);
            if (s.contains("k")) {
                if (s.at("k").is_null()) c.cluster.k.reset();
                else c.cluster.k = s.at("k").get<int>();
            }
        }
        if (j.contains("poolfeat")) {
            const auto& s = j.at("poolfeat");
            if (s.contains("kernels")) {
                c.poolfeat.kernels.clear();
                for (const auto& k : s.at("kernels")) c.poolfeat.kernels.push_back(parse_kernel(k.get<std::string>()));
            }
            opt(s, "dims", c.poolfeat.dims);
            if (s.contains("rbf_gamma")) {
                if (s.at("rbf_gamma").is_null()) c.poolfeat.rbf_gamma.reset();
                else c.poolfeat.rbf_gamma = s.at("rbf_gamma").get<double>();
            }
            opt(s, "include_fee_tier", c.poolfeat.include_fee_tier);
        }
        if (j.contains("cryptoness")) {
            const auto& s = j.at("cryptoness");
            opt(s, "z_threshold", c.cryptoness.z_threshold);
            opt(s, "window_days", c.cryptoness.window_days);
            opt(s, "step_days", c.cryptoness.step_days);
            opt(s, "bins", c.cryptoness.bins);
            opt(s, "xi_floor", c.cryptoness.xi_floor);
            if (s.contains("focus")) {
                if (s.at("focus").is_null()) c.cryptoness.focus.reset();
                else c.cryptoness.focus = parse_window(s.at("focus").get<std::string>());
            }
            if (s.contains("baseline")) {
                c.cryptoness.baseline.clear();
                for (const auto& w : s.at("baseline"))
                    c.cryptoness.baseline.push_back(parse_window(w.get<std::string>()));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed config: ") + e.what());
    }
}

inline RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    RunConfig c;
    apply_config_json(c, j, path.parent_path());
    return c;
}

// ---- small I/O helpers ----

// Shortest round-tripping text for a double.
inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string file_hash(const fs::path& p) { return hex64(fnv1a64(read_file(p))); }

struct EmbeddingTable {
    std::vector<AgentId> ids;
    Points vectors;
};

inline void write_embedding_csv(std::ostream& out, const EmbeddingMatrix& m) {
    out << "lt_id";
    for (Eigen::Index c = 0; c < m.vectors.cols(); ++c) out << ",v" << c;
    out << '\n';
    for (std::size_t i = 0; i < m.ids.size(); ++i) {
        out << m.ids[i];
        for (Eigen::Index c = 0; c < m.vectors.cols(); ++c)
            out << ',' << num(m.vectors(static_cast<Eigen::Index>(i), c));
        out << '\n';
    }
}

inline EmbeddingTable read_embedding_csv(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line.rfind("lt_id", 0) != 0)
        throw ValidationError(path.string() + ": missing embedding header");
    const auto dim = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));
    std::vector<std::vector<double>> rows;
    EmbeddingTable t;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::istringstream cells(line);
        std::string cell;
        std::getline(cells, cell, ',');
        t.ids.push_back(cell);
        std::vector<double> row;
        while (std::getline(cells, cell, ',')) {
            char* end = nullptr;
            row.push_back(std::strtod(cell.c_str(), &end));
            if (end == cell.c_str()) throw IngestError(path.string(), n, "bad number '" + cell + "'");
        }
        if (static_cast<Eigen::Index>(row.size()) != dim)
            throw IngestError(path.string(), n, "expected " + std::to_string(dim) + " values");
        rows.push_back(std::move(row));
    }
    t.vectors.resize(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (Eigen::Index c = 0; c < dim; ++c) t.vectors(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
    return t;
}

// ---- the runner ----

struct RunReport {
    nlohmann::json manifest;
    std::map<std::string, double> timings;  // seconds per stage
};

class Pipeline {
public:
    explicit Pipeline(RunConfig cfg) : c_(std::move(cfg)) {}

    RunReport run(const std::set<Stage>& requested) {
        c_.validate();
        const auto stages = plan(requested);
        check_inputs(stages);
        load_inputs(stages);

        std::error_code ec;
        fs::create_directories(c_.out, ec);
        if (ec) throw RuntimeError("cannot create output directory " + c_.out.string());

        RunReport rep;
        rep.manifest = base_manifest();
        for (Stage s : stages) {
            const auto t0 = std::chrono::steady_clock::now();
            stage_ = {{"files", nlohmann::json::object()}, {"counts", nlohmann::json::object()},
                      {"warnings", nlohmann::json::array()}};
            switch (s) {
                case Stage::select: run_select(); break;
                case Stage::interconnect: run_interconnect(); break;
                case Stage::embed: run_embed(); break;
                case Stage::cluster: run_cluster(); break;
                case Stage::poolfeat: run_poolfeat(); break;
                case Stage::cryptoness: run_cryptoness(); break;
            }
            rep.manifest["stages"][to_string(s)] = stage_;
            rep.timings[to_string(s)] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        write_text(c_.out / "manifest.json", rep.manifest.dump(2) + "\n", false);
        nlohmann::json t = rep.timings;
        write_text(c_.out / "timings.json", t.dump(2) + "\n", false);
        return rep;
    }

    // Requested stages in dependency order; missing upstream artifacts are a
    // validation error.
    std::vector<Stage> plan(const std::set<Stage>& requested) const {
        std::vector<Stage> out;
        for (Stage s : kStageOrder) {
            if (!requested.count(s)) continue;
            for (Stage d : stage_dependencies(s))
                if (!requested.count(d)) {
                    for (const auto& f : artifacts(d))
                        if (!fs::exists(c_.out / f))
                            throw ValidationError(std::string("stage ") + to_string(s) + " needs " +
                                                  (c_.out / f).string() + "; run " + to_string(d) +
                                                  " first");
                }
            out.push_back(s);
        }
        return out;
    }

    // Files a stage's dependents read, relative to the output directory.
    std::vector<fs::path> artifacts(Stage s) const {
        std::vector<fs::path> out;
        for (const auto& w : c_.selection.windows) {
            if (s == Stage::select) out.push_back(fs::path("select") / (w.label + ".json"));
            if (s == Stage::embed)
                for (int d : c_.embed.dims) out.push_back(embedding_file(w, d));
        }
        return out;
    }

private:
    RunConfig c_;
    EventLog log_;
    IngestReport ingest_;
    TokenClasses classes_;
    MarketCalendar calendar_;
    nlohmann::json stage_;
    nlohmann::json existing_;  // previous manifest with the same config hash

    static fs::path embedding_file(const TimeWindow& w, int dim) {
        return fs::path("embed") / (w.label + "_d" + std::to_string(dim) + ".csv");
    }

    void check_inputs(const std::vector<Stage>& stages) const {
        auto need = [](const fs::path& p, const char* what) {
            if (p.empty()) throw ValidationError(std::string("missing ") + what + " path");
            if (!fs::is_regular_file(p)) throw ValidationError(std::string(what) + " file not found: " + p.string());
        };
        need(c_.events, "events");
        need(c_.pools, "pools");
        if (std::find(stages.begin(), stages.end(), Stage::cluster) != stages.end()) {
            need(c_.tokens, "tokens");
            need(c_.calendar, "calendar");
        }
    }

    void load_inputs(const std::vector<Stage>& stages) {
        auto r = ingest_events(c_.events, read_pool_metadata(c_.pools), EventSchema::mixed);
        log_ = std::move(r.log);
        ingest_ = r.report;
        if (std::find(stages.begin(), stages.end(), Stage::cluster) != stages.end()) {
            classes_ = read_token_classes(c_.tokens);
            calendar_ = read_market_calendar(c_.calendar);
        }
    }

    nlohmann::json base_manifest() {
        const auto cfg = to_json(c_, false);
        const std::string hash = hex64(fnv1a64(cfg.dump()));
        nlohmann::json inputs = nlohmann::json::object();
        auto input = [&](const char* key, const fs::path& p) {
            if (p.empty() || !fs::is_regular_file(p)) return;
            inputs[key] = {{"path", p.generic_string()}, {"fnv1a64", file_hash(p)},
                           {"bytes", static_cast<std::uint64_t>(fs::file_size(p))}};
        };
        input("events", c_.events);
        input("pools", c_.pools);
        input("tokens", c_.tokens);
        input("calendar", c_.calendar);
        nlohmann::json m{{"tool", "ammlens"},
                         {"seed", c_.seed},
                         {"workers", c_.workers},
                         {"config_hash", hash},
                         {"config", cfg},
                         {"inputs", inputs},
                         {"ingest",
                          {{"lines", ingest_.lines},
                           {"accepted", ingest_.accepted},
                           {"malformed", ingest_.malformed_lines.size()}}},
                         {"stages", nlohmann::json::object()}};
        // keep entries of stages run earlier against the same config and inputs
        const auto path = c_.out / "manifest.json";
        if (fs::exists(path)) {
            try {
                auto old = nlohmann::json::parse(read_file(path));
                if (old.value("config_hash", "") == hash && old.value("inputs", nlohmann::json()) == inputs)
                    m["stages"] = old.at("stages");
            } catch (const nlohmann::json::exception&) {
            }
        }
        return m;
    }

    void write_text(const fs::path& path, const std::string& text, bool record = true) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        std::ofstream out(path, std::ios::binary);
        if (!out) throw RuntimeError("cannot write " + path.string());
        out << text;
        if (!out) throw RuntimeError("write failed for " + path.string());
        if (record)
            stage_["files"][fs::relative(path, c_.out).generic_string()] = hex64(fnv1a64(text));
    }

    void write_json(const fs::path& rel, const nlohmann::json& j) { write_text(c_.out / rel, j.dump(2) + "\n"); }

    void warn(const std::string& msg) { stage_["warnings"].push_back(msg); }

    PoolUniverse universe(const TimeWindow& w) const {
        const auto p = c_.out / "select" / (w.label + ".json");
        try {
            return universe_from_json(nlohmann::json::parse(read_file(p)));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(p.string() + " is not valid JSON: " + e.what());
        }
    }

    // ---- stages ----

    void run_select() {
        const auto candidates = coarse_filter(log_.pools, c_.selection);
        write_json("select/coarse.json", nlohmann::json{{"pools", candidates},
                                                        {"metadata_pools", log_.pools.size()}});
        stage_["counts"]["coarse"] = candidates.size();
        for (const auto& w : c_.selection.windows) {
            const auto u = window_filter(log_, candidates, w, c_.selection);
            auto j = to_json(u);
            j["start"] = format_date(day_of(w.start));
            j["end"] = format_date(day_of(w.end));
            write_json(fs::path("select") / (w.label + ".json"), j);
            stage_["counts"][w.label] = u.pools.size();
        }
    }

    void run_interconnect() {
        const std::array<AgentMeasure, 4> measures{
            AgentMeasure{AgentRole::LT, AgentIdentity::origin}, AgentMeasure{AgentRole::LT, AgentIdentity::sender},
            AgentMeasure{AgentRole::LP, AgentIdentity::origin}, AgentMeasure{AgentRole::LP, AgentIdentity::sender}};
        for (const auto& w : c_.selection.windows) {
            const auto u = universe(w);
            const fs::path dir = "interconnect";
            std::ostringstream sweep;
            sweep << "measure,threshold,size\n";
            nlohmann::json components = nlohmann::json::object();
            for (const auto& m : measures) {
                const auto g = build_common_agent_graph(log_, u.pools, w, m);
                std::ostringstream edges;
                write_edge_csv(edges, g);
                write_text(c_.out / dir / (w.label + "_common_" + m.name() + ".csv"), edges.str());
                for (const auto& pt : threshold_sweep(g, c_.interconnect.sweep))
                    sweep << m.name() << ',' << pt.threshold << ',' << pt.size << '\n';
                const auto threshold = m.identity == AgentIdentity::origin ? c_.interconnect.origin_threshold
                                                                            : c_.interconnect.sender_threshold;
                const auto gc = giant_component(g, threshold);
                components[m.name()] = {{"threshold", threshold}, {"pools", gc}};
                stage_["counts"][w.label + "_giant_" + m.name()] = gc.size();
            }
            write_text(c_.out / dir / (w.label + "_sweep.csv"), sweep.str());

            const auto bg = extract_bridges(log_, u.pools, w);
            std::ostringstream bridges;
            write_edge_csv(bridges, bg);
            write_text(c_.out / dir / (w.label + "_bridges.csv"), bridges.str());
            const auto bgc = bridge_giant_component(bg, c_.interconnect.bridge_min_count);
            components["bridges"] = {{"min_count", c_.interconnect.bridge_min_count}, {"pools", bgc}};
            write_json(dir / (w.label + "_components.json"), components);

            std::ostringstream cent;
            cent << "pool,score\n";
            if (!bgc.empty()) {
                const auto r = eigenvector_centrality(
                    bridge_undirected(bg, bgc, c_.interconnect.bridge_min_count));
                if (!r.converged) warn(w.label + ": bridge centrality did not converge");
                for (const auto& [p, s] : r.score) cent << p << ',' << num(s) << '\n';
            }
            write_text(c_.out / dir / (w.label + "_centrality.csv"), cent.str());

            std::ostringstream ov;
            ov << "pool,lts,lps,both,ratio_of_lts,ratio_of_lps\n";
            for (const auto& [p, o] : agent_overlap(log_, u.pools, w))
                ov << p << ',' << o.lts << ',' << o.lps << ',' << o.both << ',' << num(o.ratio_of_lts) << ','
                   << num(o.ratio_of_lps) << '\n';
            write_text(c_.out / dir / (w.label + "_overlap.csv"), ov.str());

            std::int64_t total = 0;
            for (const auto& [pair, n] : bg.edges) total += n;
            stage_["counts"][w.label + "_bridges"] = total;
        }
    }

    void run_embed() {
        for (const auto& w : c_.selection.windows) {
            const auto u = universe(w);
            const auto lts = filter_lts(log_, u.pools, w, c_.embed.min_txns, c_.embed.max_txns);
            stage_["counts"][w.label + "_lts"] = lts.size();
            if (lts.size() < 2) {
                warn(w.label + ": fewer than 2 LTs pass the swap bounds; no embeddings");
                for (int d : c_.embed.dims) write_text(c_.out / embedding_file(w, d), "lt_id\n");
                continue;
            }
            const auto graphs = build_transaction_graphs(log_, lts, u.pools, w);
            std::vector<AgentId> ids;
            std::vector<FeatureBag> corpus;
            for (const auto& g : graphs) {
                ids.push_back(g.lt_id);
                corpus.push_back(wl_relabel(g, sample_neighbourhoods(g, c_.seed), 1));
            }
            for (int d : c_.embed.dims) {
                TrainConfig t = c_.embed.train;
                t.dim = d;
                t.rng_seed = c_.seed;
                t.workers = c_.workers;
                const auto m = train_embeddings(ids, corpus, t);
                std::ostringstream csv;
                write_embedding_csv(csv, m);
                write_text(c_.out / embedding_file(w, d), csv.str());
                const auto stem = w.label + "_d" + std::to_string(d);
                write_json(fs::path("embed") / (stem + "_vocab.json"), to_json(m.vocab));
                std::ostringstream loss;
                loss << "epoch,loss\n";
                for (std::size_t e = 0; e < m.epoch_loss.size(); ++e) loss << e + 1 << ',' << num(m.epoch_loss[e]) << '\n';
                write_text(c_.out / "embed" / (stem + "_loss.csv"), loss.str());
                stage_["counts"][stem + "_vocab"] = m.vocab.size();
            }
        }
    }

    void run_cluster() {
        for (const auto& w : c_.selection.windows) {
            std::vector<EmbeddingTable> tables;
            for (int d : c_.embed.dims) tables.push_back(read_embedding_csv(c_.out / embedding_file(w, d)));
            const auto& ids = tables.front().ids;
            for (const auto& t : tables)
                if (t.ids != ids) throw ValidationError(w.label + ": embedding files list different LTs");
            const auto n = static_cast<int>(ids.size());
            stage_["counts"][w.label + "_lts"] = n;
            if (n < 2) {
                warn(w.label + ": fewer than 2 embedded LTs; nothing to cluster");
                continue;
            }

            const auto sweep = kmeans_sweep(tables.front().vectors, std::min(c_.cluster.k_min, n),
                                            std::min(c_.cluster.k_max, n), mix_seed(c_.seed, 0xc1), c_.cluster.restarts);
            std::ostringstream inertia;
            inertia << "k,inertia\n";
            std::map<int, double> curve;
            for (const auto& [k, cl] : sweep) {
                inertia << k << ',' << num(cl.inertia) << '\n';
                curve[k] = cl.inertia;
            }
            write_text(c_.out / "cluster" / (w.label + "_inertia.csv"), inertia.str());
            int k = 0;
            if (c_.cluster.k) k = std::min(*c_.cluster.k, n);
            else if (curve.size() >= 3) k = elbow_select(curve, {c_.cluster.elbow_gain});
            else k = curve.rbegin()->first;
            stage_["counts"][w.label + "_k"] = k;

            std::vector<Clustering> clusterings;
            for (std::size_t t = 0; t < tables.size(); ++t)
                clusterings.push_back(t == 0 && sweep.count(k)
                                          ? sweep.at(k)
                                          : kmeans_best_of(tables[t].vectors, k, mix_seed(c_.seed, 0xc2 + t),
                                                           c_.cluster.restarts));

            std::ostringstream labels;
            labels << "lt_id";
            for (int d : c_.embed.dims) labels << ",d" << d;
            labels << '\n';
            for (int i = 0; i < n; ++i) {
                labels << ids[static_cast<std::size_t>(i)];
                for (const auto& cl : clusterings) labels << ',' << cl.labels[static_cast<std::size_t>(i)];
                labels << '\n';
            }
            write_text(c_.out / "cluster" / (w.label + "_labels.csv"), labels.str());

            std::ostringstream ari;
            ari << "dim";
            for (int d : c_.embed.dims) ari << ",d" << d;
            ari << '\n';
            for (std::size_t a = 0; a < clusterings.size(); ++a) {
                ari << 'd' << c_.embed.dims[a];
                for (std::size_t b = 0; b < clusterings.size(); ++b)
                    ari << ',' << num(adjusted_rand_index(clusterings[a].labels, clusterings[b].labels));
                ari << '\n';
            }
            write_text(c_.out / "cluster" / (w.label + "_ari.csv"), ari.str());

            // behavioural profiles
            const auto u = universe(w);
            std::map<PoolId, PoolClass> class_map;
            for (const auto& p : u.pools) class_map[p] = classify_pool(log_.pool(p), classes_);
            const std::set<AgentId> id_set(ids.begin(), ids.end());
            const auto profiles = lt_features(log_, id_set, u.pools, w, class_map, calendar_);
            std::ostringstream feat;
            feat << "lt_id";
            for (const auto* c : LTProfile::columns()) feat << ',' << c;
            feat << '\n';
            for (const auto& [lt, p] : profiles) {
                feat << lt;
                for (double v : p.values()) feat << ',' << num(v);
                feat << '\n';
            }
            write_text(c_.out / "cluster" / (w.label + "_lt_features.csv"), feat.str());

            const auto prof = profile_clusters(ids, clusterings.front(), profiles);
            std::ostringstream heat;
            heat << "cluster,size";
            for (const auto* c : LTProfile::columns()) heat << ',' << c;
            heat << '\n';
            for (int cl = 0; cl < prof.k; ++cl) {
                heat << cl << ',' << prof.sizes[static_cast<std::size_t>(cl)];
                for (double v : prof.means[static_cast<std::size_t>(cl)]) heat << ',' << num(v);
                heat << '\n';
            }
            write_text(c_.out / "cluster" / (w.label + "_profile.csv"), heat.str());
        }
    }

    void run_poolfeat() {
        for (const auto& w : c_.selection.windows) {
            const auto u = universe(w);
            const auto rows = compute_pool_features(log_, u.pools, w);
            std::ostringstream csv;
            csv << "pool";
            for (const auto* n : PoolFeatureRow::names()) csv << ',' << n;
            csv << ",SfeeTier,SstdP_defined\n";
            for (const auto& [p, r] : rows) {
                csv << p;
                for (double v : r.values()) csv << ',' << num(v);
                csv << ',' << num(r.SfeeTier) << ',' << (r.sstdp_defined ? 1 : 0) << '\n';
            }
            write_text(c_.out / "poolfeat" / (w.label + "_features.csv"), csv.str());
            stage_["counts"][w.label + "_pools"] = rows.size();

            const auto n = static_cast<Eigen::Index>(rows.size());
            const Eigen::Index d = PoolFeatureRow::kFeatures;
            Eigen::MatrixXd full(n, d + 1);
            std::vector<PoolId> ids;
            {
                Eigen::Index i = 0;
                for (const auto& [p, r] : rows) {
                    ids.push_back(p);
                    const auto v = r.values();
                    for (Eigen::Index c = 0; c < d; ++c) full(i, c) = v[static_cast<std::size_t>(c)];
                    full(i, d) = r.SfeeTier;
                    ++i;
                }
            }
            std::vector<std::string> cols(PoolFeatureRow::names().begin(), PoolFeatureRow::names().end());
            cols.emplace_back("SfeeTier");
            if (n < 3) {
                warn(w.label + ": fewer than 3 pools; no correlation matrix or PCA");
                continue;
            }
            const auto rho = spearman_matrix(full);
            std::ostringstream sp;
            sp << "feature";
            for (const auto& c : cols) sp << ',' << c;
            sp << '\n';
            for (Eigen::Index a = 0; a < rho.rows(); ++a) {
                sp << cols[static_cast<std::size_t>(a)];
                for (Eigen::Index b = 0; b < rho.cols(); ++b) sp << ',' << num(rho(a, b));
                sp << '\n';
            }
            write_text(c_.out / "poolfeat" / (w.label + "_spearman.csv"), sp.str());

            const Eigen::MatrixXd input = c_.poolfeat.include_fee_tier ? full : Eigen::MatrixXd(full.leftCols(d));
            for (auto kernel : c_.poolfeat.kernels) {
                const std::string name = to_string(kernel);
                PcaResult r;
                try {
                    r = pca_project(input, kernel, {c_.poolfeat.dims, c_.poolfeat.rbf_gamma});
                } catch (const ValidationError& e) {
                    warn(w.label + " " + name + " PCA skipped: " + e.what());
                    continue;
                }
                std::ostringstream proj;
                proj << "pool";
                for (int c = 0; c < c_.poolfeat.dims; ++c) proj << ",pc" << c + 1;
                proj << ",fee_tier\n";
                for (Eigen::Index i = 0; i < n; ++i) {
                    proj << ids[static_cast<std::size_t>(i)];
                    for (int c = 0; c < c_.poolfeat.dims; ++c) proj << ',' << num(r.projections(i, c));
                    proj << ',' << log_.pool(ids[static_cast<std::size_t>(i)]).fee_tier << '\n';
                }
                write_text(c_.out / "poolfeat" / (w.label + "_pca_" + name + ".csv"), proj.str());
                const auto ratio = explained_ratio(r.spectrum);
                std::ostringstream spec;
                spec << "component,eigenvalue,explained\n";
                for (Eigen::Index i = 0; i < r.spectrum.size(); ++i)
                    spec << i + 1 << ',' << num(r.spectrum(i)) << ',' << num(ratio(i)) << '\n';
                write_text(c_.out / "poolfeat" / (w.label + "_spectrum_" + name + ".csv"), spec.str());
            }
        }
    }

    void run_cryptoness() {
        const auto& cc = c_.cryptoness;
        std::set<PoolId> all_pools;
        for (const auto& w : c_.selection.windows) {
            const auto u = universe(w);
            all_pools.insert(u.pools.begin(), u.pools.end());
            std::ostringstream daily, fits, sliding, iso, rdist;
            daily << "pool,date,p_vol,v_stab,t_liq,n_fee,x\n";
            fits << "pool,r_pool,xi,n_obs,rows,dropped_days,status\n";
            sliding << "pool,end_date,r_pool,xi,xi_clamped,n_obs\n";
            iso << "pool,bin,t_lo,t_hi,p_vol,v_stab,most_populated\n";
            rdist << "pool,retained,mean,median,min,max,magnitude\n";
            std::size_t fitted = 0;
            for (const auto& p : u.pools) {
                const auto rows = daily_law_rows(log_, p, w);
                for (const auto& r : rows.rows)
                    daily << p << ',' << format_date(r.date) << ',' << num(r.p_vol) << ',' << num(r.v_stab) << ','
                          << num(r.t_liq) << ',' << num(r.n_fee) << ',' << num(r.x()) << '\n';
                if (rows.nonpositive_tvl_rows)
                    warn(w.label + " " + p + ": " + std::to_string(rows.nonpositive_tvl_rows) +
                         " rows with non-positive proxyTVL");

                const auto kept = rows.rows.size() >= 3 ? zscore_filter(rows.rows, cc.z_threshold) : rows.rows;
                const auto outcome = try_fit_crypto_law(kept);
                fits << p << ',';
                if (outcome.fit) {
                    ++fitted;
                    fits << num(outcome.fit->r_pool) << ',' << num(outcome.fit->xi) << ',' << outcome.fit->n_obs;
                } else {
                    fits << ",," << kept.size();
                }
                fits << ',' << rows.rows.size() << ',' << rows.dropped_days << ','
                     << (outcome.fit ? "ok" : to_string(outcome.failure)) << '\n';

                const auto series = sliding_cryptoness(rows.rows, {cc.window_days, cc.step_days, cc.z_threshold});
                for (const auto& s : series)
                    sliding << p << ',' << format_date(s.end_date) << ',' << num(s.fit.r_pool) << ','
                            << num(s.fit.xi) << ',' << num(s.xi_clamped) << ',' << s.fit.n_obs << '\n';
                const auto dist = rpool_distribution(series, cc.xi_floor);
                rdist << p << ',' << dist.values.size() << ',' << num(dist.mean) << ',' << num(dist.median) << ','
                      << num(dist.min) << ',' << num(dist.max) << ','
                      << (dist.magnitude ? std::to_string(*dist.magnitude) : std::string()) << '\n';

                if (!rows.rows.empty()) {
                    try {
                        const auto bins = isotherm_bins(rows.rows, cc.bins);
                        for (std::size_t b = 0; b < bins.points.size(); ++b) {
                            const double lo = bins.t_min + static_cast<double>(b) * bins.width;
                            const bool top = static_cast<int>(b) == bins.most_populated[0] ||
                                             static_cast<int>(b) == bins.most_populated[1];
                            for (const auto& [pv, vs] : bins.points[b])
                                iso << p << ',' << b << ',' << num(lo) << ',' << num(lo + bins.width) << ','
                                    << num(pv) << ',' << num(vs) << ',' << (top ? 1 : 0) << '\n';
                        }
                    } catch (const ValidationError& e) {
                        warn(w.label + " " + p + " isotherms skipped: " + e.what());
                    }
                }
            }
            const fs::path dir = c_.out / "cryptoness";
            write_text(dir / (w.label + "_daily.csv"), daily.str());
            write_text(dir / (w.label + "_fits.csv"), fits.str());
            write_text(dir / (w.label + "_sliding.csv"), sliding.str());
            write_text(dir / (w.label + "_isotherms.csv"), iso.str());
            write_text(dir / (w.label + "_rpool.csv"), rdist.str());
            stage_["counts"][w.label + "_fitted"] = fitted;
        }
        if (cc.focus) {
            std::ostringstream op;
            op << "pool,swap,mint,burn,average\n";
            auto cell = [](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
            for (const auto& p : all_pools) {
                const auto o = op_change(log_, p, *cc.focus, cc.baseline);
                op << p << ',' << cell(o.swap) << ',' << cell(o.mint) << ',' << cell(o.burn) << ','
                   << cell(o.average) << '\n';
            }
            write_text(c_.out / "cryptoness" / "opchange.csv", op.str());
        }
    }
};

inline RunReport run_pipeline(const RunConfig& cfg, const std::set<Stage>& stages) {
    return Pipeline(cfg).run(stages);
}

inline std::set<Stage> all_stages() { return {kStageOrder.begin(), kStageOrder.end()}; }

// Run configuration for a dataset written by write_synthetic into `dir`.
// Interconnect thresholds are scaled down to the synthetic agent counts.
inline RunConfig synthetic_run_config(const SyntheticSpec& spec, const fs::path& dir = {},
                                      const fs::path& out = "out") {
    RunConfig c;
    c.events = dir / "events.jsonl";
    c.pools = dir / "pools.jsonl";
    c.tokens = dir / "tokens.json";
    c.calendar = dir / "calendar.csv";
    c.out = out;
    c.seed = spec.seed;
    c.selection.windows = {spec.window()};
    c.interconnect.sweep = {0, 1, 2, 5, 10, 20, 50, 100, 200, 500};
    c.interconnect.origin_threshold = 50;
    c.interconnect.sender_threshold = 2;
    c.interconnect.bridge_min_count = 5;
    return c;
}

}  // namespace ammlens
