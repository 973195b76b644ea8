#include <gtest/gtest.h>

#include "ammlens/pipeline.hpp"
#include "ammlens/synthetic.hpp"
#include "oracles.hpp"

using namespace ammlens;

namespace {

// One synthetic dataset shared by the tests in this file.
const SyntheticWorld& world() {
    static const SyntheticWorld w = generate_synthetic(default_synthetic_spec());
    return w;
}

const std::filesystem::path& data_dir() {
    static const std::filesystem::path dir = [] {
        auto d = oracle::scratch_dir("pipeline_data");
        write_synthetic(world(), d);
        return d;
    }();
    return dir;
}

std::map<std::string, std::string> bundle(const std::filesystem::path& out) {
    std::map<std::string, std::string> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(out))
        if (e.is_regular_file()) files[std::filesystem::relative(e.path(), out).generic_string()] = read_file(e.path());
    return files;
}

}  // namespace

TEST(Synthetic, SpecJsonRoundTrip) {
    auto spec = default_synthetic_spec();
    spec.seed = 99;
    spec.pools[0].noise = 0.2;
    const auto back = synthetic_spec_from_json(to_json(spec));
    EXPECT_EQ(to_json(back), to_json(spec));
    EXPECT_EQ(synthetic_spec_from_json(nlohmann::json{{"days", 30}}).days, 30);
    EXPECT_THROW(synthetic_spec_from_json(nlohmann::json{{"days", "many"}}), ValidationError);
}

TEST(Synthetic, SpecValidation) {
    auto spec = default_synthetic_spec();
    spec.archetypes[1].alphabet.push_back(spec.archetypes[0].alphabet[0]);
    EXPECT_THROW(spec.validate(), ValidationError);
    spec = default_synthetic_spec();
    spec.pools[0].fee_tier = 42;
    EXPECT_THROW(spec.validate(), ValidationError);
    spec = default_synthetic_spec();
    spec.start += 5;
    EXPECT_THROW(spec.validate(), ValidationError);
}

TEST(Synthetic, PlantedStructure) {
    const auto& w = world();
    const auto& spec = w.spec;
    EXPECT_EQ(w.lt_archetype.size(), spec.archetypes.size() * static_cast<std::size_t>(spec.lts_per_archetype));
    std::map<AgentId, int> swaps;
    for (const auto& s : w.log.swaps)
        if (w.lt_archetype.count(s.origin) && spec.window().contains(s.ts)) ++swaps[s.origin];
    for (const auto& [lt, n] : swaps) {
        EXPECT_GE(n, spec.lt_swaps_min);
        EXPECT_LE(n, spec.lt_swaps_max);
    }
    std::map<PoolId, std::int64_t> events;
    for (const auto& s : w.log.swaps) ++events[s.pool];
    for (const auto& l : w.log.liquidity) ++events[l.pool];
    for (const auto& [id, m] : w.log.pools) EXPECT_EQ(m.txn_count, events[id]) << id;
    for (const auto& p : spec.pools) EXPECT_GT(w.planted.at(p.id).r_pool, 0.0);
    for (DayIndex d = spec.window().first_day(); d < spec.window().end_day(); ++d) EXPECT_TRUE(w.calendar.count(d));
    EXPECT_EQ(generate_synthetic(spec).log, w.log);
}

TEST(Pipeline, RunAllWritesBundleAndManifest) {
    const auto out = oracle::scratch_dir("pipeline_all");
    const auto cfg = synthetic_run_config(world().spec, data_dir(), out);
    const auto rep = run_pipeline(cfg, all_stages());
    const auto& m = rep.manifest;
    EXPECT_EQ(m.at("seed"), world().spec.seed);
    EXPECT_EQ(m.at("ingest").at("malformed"), 0);
    for (Stage s : kStageOrder) {
        const auto& st = m.at("stages").at(to_string(s));
        for (const auto& [file, hash] : st.at("files").items())
            EXPECT_EQ(hash.get<std::string>(), file_hash(out / file)) << file;
    }
    const auto sel = nlohmann::json::parse(read_file(out / "select" / "A.json"));
    std::set<std::string> pools = sel.at("pools");
    EXPECT_FALSE(pools.count("PEPE-WETH-10000"));
    EXPECT_FALSE(pools.count("UNI-WETH-10000"));
    EXPECT_TRUE(pools.count("USDC-WETH-500"));
    EXPECT_TRUE(std::filesystem::exists(out / "timings.json"));
    EXPECT_TRUE(std::filesystem::exists(out / "cluster" / "A_labels.csv"));
    EXPECT_TRUE(std::filesystem::exists(out / "cryptoness" / "A_fits.csv"));
}

TEST(Pipeline, StageByStageMatchesRunAll) {
    const auto a = oracle::scratch_dir("pipeline_a"), b = oracle::scratch_dir("pipeline_b");
    run_pipeline(synthetic_run_config(world().spec, data_dir(), a), all_stages());
    const auto cfg = synthetic_run_config(world().spec, data_dir(), b);
    for (Stage s : kStageOrder) run_pipeline(cfg, {s});
    auto x = bundle(a), y = bundle(b);
    x.erase("timings.json");
    y.erase("timings.json");
    EXPECT_EQ(x, y);
}

TEST(Pipeline, MissingUpstreamArtifactsAreValidationErrors) {
    const auto out = oracle::scratch_dir("pipeline_missing");
    const auto cfg = synthetic_run_config(world().spec, data_dir(), out);
    EXPECT_THROW(run_pipeline(cfg, {Stage::cluster}), ValidationError);
    EXPECT_THROW(run_pipeline(cfg, {Stage::cryptoness}), ValidationError);
    auto bad = cfg;
    bad.events = data_dir() / "nope.jsonl";
    EXPECT_THROW(run_pipeline(bad, {Stage::select}), ValidationError);
    bad = cfg;
    bad.selection.windows[0].label = "a b";
    EXPECT_THROW(run_pipeline(bad, {Stage::select}), ValidationError);
}

TEST(Pipeline, ConfigJsonRoundTrip) {
    auto cfg = synthetic_run_config(world().spec, "/data", "/out");
    cfg.embed.dims = {16, 32};
    cfg.cluster.k = 4;
    cfg.cryptoness.focus = parse_window("F:2022-03-01:2022-03-08");
    cfg.cryptoness.baseline = {parse_window("B:2022-02-01:2022-02-08")};
    RunConfig back;
    apply_config_json(back, to_json(cfg));
    EXPECT_EQ(to_json(back), to_json(cfg));
    EXPECT_THROW(apply_config_json(back, nlohmann::json{{"cluster", {{"k_min", "one"}}}}), ValidationError);
}

TEST(Pipeline, EmbeddingCsvRoundTrip) {
    const auto out = oracle::scratch_dir("pipeline_embcsv");
    EmbeddingMatrix m;
    m.ids = {"a", "b"};
    m.vectors.resize(2, 3);
    m.vectors << 0.1, -2.5e-7, 3, 1.0 / 3, 7, -0.0;
    {
        std::ofstream f(out / "e.csv", std::ios::binary);
        write_embedding_csv(f, m);
    }
    const auto t = read_embedding_csv(out / "e.csv");
    EXPECT_EQ(t.ids, m.ids);
    EXPECT_EQ(t.vectors, m.vectors);
}
