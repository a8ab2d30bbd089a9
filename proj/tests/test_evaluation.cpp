#include <gtest/gtest.h>

#include "support.hpp"

using namespace sept;

namespace {

SyntheticSpec spec_with_sigma(double sigma, std::uint64_t seed = 3) {
    SyntheticSpec s;
    s.sigma = sigma;
    s.seed = seed;
    return s;
}

TrainConfig quick(std::size_t epochs = 5) {
    TrainConfig c;
    c.epochs = epochs;
    c.shots = 4;
    c.context_len = 4;
    c.neighbors = 3;
    c.templates = 4;
    return c;
}

TemplatePool shipped_pool() { return TemplatePool::from_json(read_json_file(test::fixture("templates_100.json"))); }

}  // namespace

TEST(HarmonicMean, KnownValues) {
    EXPECT_EQ(harmonic_mean(50.0, 50.0), 50.0);
    EXPECT_EQ(harmonic_mean(100.0, 0.0), 0.0);
    EXPECT_EQ(harmonic_mean(0.0, 0.0), 0.0);
    EXPECT_NEAR(harmonic_mean(97.27, 61.38), 75.27, 0.01);
    EXPECT_THROW(harmonic_mean(-1.0, 5.0), Error);
}

TEST(HarmonicMean, NeverExceedsTheArithmeticMean) {
    SeededRng rng(1);
    for (int k = 0; k < 1000; ++k) {
        const double a = 100.0 * rng.uniform(), b = 100.0 * rng.uniform();
        const double h = harmonic_mean(a, b);
        EXPECT_LE(h, 0.5 * (a + b) + 1e-12);
        EXPECT_GE(h, std::min(a, b) - 1e-12);
    }
}

TEST(Report, AveragesPerRunHarmonicMeans) {
    const EvalReport r = EvalReport::aggregate({{0, 0, 100.0, 0.0, 0.0}, {1, 0, 0.0, 100.0, 0.0}});
    EXPECT_EQ(r.base, 50.0);
    EXPECT_EQ(r.novel, 50.0);
    EXPECT_EQ(r.h, 0.0);
    EXPECT_NE(r.h, harmonic_mean(r.base, r.novel));
}

TEST(Report, JsonAndCsv) {
    const EvalReport r = EvalReport::aggregate({{0, 0, 80.0, 60.0, harmonic_mean(80.0, 60.0)}}, 0xabcULL);
    EXPECT_EQ(eval_report_from_json(json::parse(to_json(r).dump())), r);
    const std::string csv = to_csv(r);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "kind,seed,fold,base,new,h");
    EXPECT_NE(csv.find("run,0,0,80,60,"), std::string::npos);
}

TEST(Classify, TiesGoToTheLowestIndex) {
    const Vec x{1.0, 0.0};
    const std::vector<Vec> w{Vec{0.0, 1.0}, Vec{1.0, 0.0}, Vec{1.0, 0.0}};
    const Prediction p = classify_embeddings(x, w, {4, 7, 9}, 0.01);
    EXPECT_EQ(p.position, 1u);
    EXPECT_EQ(p.class_index, 7u);
    EXPECT_NEAR(p.probs[1], 0.5, 1e-12);
    EXPECT_THROW(classify_embeddings(x, w, {1, 2}, 0.01), Error);
}

TEST(ZeroShot, NoiselessSamplesAreAlwaysCorrect) {
    const DatasetManifest m = generate_synthetic(spec_with_sigma(0.0));
    EXPECT_EQ(zero_shot_accuracy(m, TemplatePool()), 100.0);
    const RunRecord r = zero_shot_base_to_new(m, TemplatePool());
    EXPECT_EQ(r.base, 100.0);
    EXPECT_EQ(r.novel, 100.0);
}

TEST(ZeroShot, HeavyNoiseApproachesChance) {
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed)
        mean += zero_shot_accuracy(generate_synthetic(spec_with_sigma(5.0, seed)), TemplatePool()) / 5.0;
    EXPECT_LT(mean, 25.0);
}

TEST(ZeroShot, PinnedSyntheticValue) {
    EXPECT_DOUBLE_EQ(zero_shot_accuracy(generate_synthetic(spec_with_sigma(0.3)), TemplatePool()), 63.020833333333336);
}

TEST(BaseToNew, EvaluatesEachSplitInItsOwnLabelSpace) {
    const DatasetManifest m = load_manifest(test::fixture("tiny/manifest.json"));
    const auto tp = train(m, nullptr, TemplatePool(), [] {
        TrainConfig c = quick();
        c.lambda = 0.0;
        return c;
    }());
    const RunRecord r = evaluate_base_to_new(tp, m);
    EXPECT_GE(r.base, 0.0);
    EXPECT_LE(r.base, 100.0);
    EXPECT_EQ(r.h, harmonic_mean(r.base, r.novel));
    // Two classes per split on the tiny fixture: every accuracy is a multiple of 100/|test|.
    const auto rows = m.filter_split(m.fold(0).test, Split::novel);
    const double step = 100.0 / static_cast<double>(rows.size());
    EXPECT_NEAR(std::fmod(r.novel + 1e-9, step), 0.0, 1e-6);
}

TEST(BaseToNew, RunCoversEverySeedAndFold) {
    const DatasetManifest m = load_manifest(test::fixture("tiny/manifest_2fold.json"));
    ASSERT_EQ(m.folds.size(), 2u);
    TrainConfig c = quick(3);
    c.lambda = 0.0;
    const EvalReport r = run_base_to_new(m, nullptr, TemplatePool(), c, {0, 1});
    ASSERT_EQ(r.runs.size(), 4u);
    EXPECT_EQ(r.runs[1].seed, 0u);
    EXPECT_EQ(r.runs[1].fold, 1u);
    EXPECT_EQ(r.runs[2].seed, 1u);
    EXPECT_EQ(r.runs[2].fold, 0u);
    EXPECT_EQ(r, run_base_to_new(m, nullptr, TemplatePool(), c, {0, 1}));
    EXPECT_EQ(r.config_hash, config_hash(c));
}

TEST(BaseToNew, RefusesAManifestWithAnotherEncoder) {
    const DatasetManifest m = load_manifest(test::fixture("tiny/manifest.json"));
    TrainConfig c = quick(2);
    c.lambda = 0.0;
    TrainedPrompt tp = train(m, nullptr, TemplatePool(), c);
    tp.encoder_hash ^= 1;
    EXPECT_THROW(evaluate_base_to_new(tp, m), Error);
}

TEST(CrossDataset, SharedEncoderTransfersTheContext) {
    const DatasetManifest src = load_manifest(test::fixture("cross/sound-event-source.json"));
    const DatasetManifest tgt = load_manifest(test::fixture("cross/sound-event-target.json"));
    TrainConfig c = quick(3);
    c.lambda = 0.0;
    c.scope = TrainScope::all;
    const auto tp = train(src, nullptr, TemplatePool(), c);
    const CrossResult r = evaluate_cross_dataset(tp, src, tgt);
    EXPECT_GT(r.source, 0.0);
    EXPECT_GT(r.target, 0.0);
    EXPECT_LE(r.target, 100.0);
}

TEST(Diversity, IdenticalNeighborsScoreZero) {
    const auto enc = FrozenEncoder::create(EncoderConfig{});
    const NeighborSet nb({{"siren", "siren", "siren"}});
    EXPECT_EQ(diversity_score(enc, nb, 0), 0.0);
}

TEST(Diversity, OrthogonalNeighborsScoreOne) {
    EncoderConfig c;
    c.architecture = Architecture::pool_identity;
    c.dim = 4;
    std::vector<std::pair<std::string, Vec>> rows;
    const std::vector<std::string> words{"north", "south", "east", "west"};
    for (std::size_t k = 0; k < 4; ++k) {
        Vec e(4, 0.0);
        e[k] = 1.0;
        rows.emplace_back(words[k], e);
    }
    const auto enc = FrozenEncoder::with_injected_rows(c, rows);
    const NeighborSet nb({words});
    EXPECT_EQ(diversity_score(enc, nb, 0, "{class}"), 1.0);
    EXPECT_THROW(diversity_from_embeddings({Vec{1.0}}), Error);
}

TEST(SimilarityStats, OwnNeighborsAreCloserOnTheSyntheticFixture) {
    const DatasetManifest m = load_manifest(test::fixture("synthetic/manifest.json"));
    const NeighborSet nb = NeighborSet::from_json(read_json_file(test::fixture("synthetic/neighbors.json")), m.classes);
    const SimilarityStats st = neighbor_similarity_stats(m.make_encoder(), m.classes, nb);
    const std::size_t K = m.classes.size(), N = nb.per_class();
    EXPECT_EQ(st.positive.size(), K * N);
    EXPECT_EQ(st.negative.size(), K * (K - 1) * N);
    ASSERT_TRUE(st.mean_negative.has_value());
    EXPECT_GT(st.mean_positive - *st.mean_negative, 0.0);
    std::size_t binned = 0;
    for (std::size_t c : st.positive_hist.counts) binned += c;
    EXPECT_EQ(binned, st.positive.size());
}

TEST(SimilarityHistogram, EdgesAndClamping) {
    SimilarityHistogram h;
    h.add(-1.0);
    h.add(1.0);
    h.add(0.0);
    EXPECT_EQ(h.counts.front(), 1u);
    EXPECT_EQ(h.counts.back(), 1u);
    EXPECT_EQ(h.counts[20], 1u);
    EXPECT_DOUBLE_EQ(SimilarityHistogram::lower_edge(40), 1.0);
}

TEST(OverlapFilter, RemovesCollisionsAndRepads) {
    const DatasetManifest m = load_manifest(test::fixture("tiny/manifest.json"));
    const NeighborSet nb =
        NeighborSet::from_json(read_json_file(test::fixture("tiny/neighbors_collision.json")), m.classes);
    std::vector<std::string> new_names;
    for (std::size_t i : m.classes.new_indices()) new_names.push_back(m.classes.name(i));
    const FilterResult f = filter_overlapping_neighbors(nb, new_names);
    EXPECT_EQ(f.removed, 1u);
    EXPECT_EQ(f.total, nb.classes() * nb.per_class());
    EXPECT_DOUBLE_EQ(f.fraction, 1.0 / static_cast<double>(f.total));
    EXPECT_EQ(f.neighbors.per_class(), nb.per_class());
    for (const auto& l : f.neighbors.lists())
        for (const auto& s : l)
            for (const auto& n : new_names) EXPECT_NE(normalize_name(s), normalize_name(n));
}

TEST(OverlapFilter, ParityWhenNothingOverlaps) {
    const DatasetManifest m = load_manifest(test::fixture("synthetic/manifest.json"));
    const NeighborSet nb = NeighborSet::from_json(read_json_file(test::fixture("synthetic/neighbors.json")), m.classes);
    std::vector<std::string> new_names;
    for (std::size_t i : m.classes.new_indices()) new_names.push_back(m.classes.name(i));
    const FilterResult f = filter_overlapping_neighbors(nb, new_names);
    EXPECT_EQ(f.removed, 0u);
    EXPECT_EQ(f.neighbors, nb);
    TrainConfig c = quick(3);
    c.neighbors = 5;
    EXPECT_EQ(run_base_to_new(m, &f.neighbors, shipped_pool(), c, {0}), run_base_to_new(m, &nb, shipped_pool(), c, {0}));
}

TEST(Sweep, FlagGridHasSevenSettingsStartingWithTheBaseline) {
    const auto grid = flag_grid();
    ASSERT_EQ(grid.size(), 7u);
    EXPECT_FALSE(grid[0].second.any());
    EXPECT_EQ(grid[6].second, AblationFlags::full());
    const auto settings = sweep_settings(SweepAxis::flags, quick(), {});
    EXPECT_EQ(settings.size(), 7u);
    EXPECT_THROW(sweep_settings(SweepAxis::neighbors, quick(), {1.5}), Error);
    EXPECT_EQ(sweep_axis_from_string("margin-mode"), SweepAxis::margin_mode);
}

TEST(Sweep, LambdaAxisRunsEverySetting) {
    const DatasetManifest m = load_manifest(test::fixture("tiny/manifest.json"));
    const NeighborSet nb = NeighborSet::from_json(read_json_file(test::fixture("tiny/neighbors.json")), m.classes);
    const SweepTable t = run_sweep(m, &nb, shipped_pool(), SweepAxis::lambda,
                                   sweep_settings(SweepAxis::lambda, quick(2), {0.0, 3.0}), {0});
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0].label, "lambda=0");
    EXPECT_EQ(t.rows[1].config.lambda, 3.0);
    const std::string csv = to_csv(t);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
    EXPECT_EQ(to_json(t).at("rows").size(), 2u);
}

TEST(Dump, EmitsOneLinePerPrompt) {
    const DatasetManifest m = load_manifest(test::fixture("tiny/manifest.json"));
    const NeighborSet nb = NeighborSet::from_json(read_json_file(test::fixture("tiny/neighbors.json")), m.classes);
    const std::string out = dump_embeddings(m.make_encoder(), m.classes, nullptr, TemplatePool(), &nb);
    EXPECT_EQ(static_cast<std::size_t>(std::count(out.begin(), out.end(), '\n')), m.classes.size() * (1 + nb.per_class()));
    const json first = json::parse(out.substr(0, out.find('\n')));
    EXPECT_EQ(first.at("kind"), "class-zero-shot");
    EXPECT_EQ(first.at("vector").size(), m.dim);
}
