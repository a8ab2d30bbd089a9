// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracle.hpp"
#include "sept/cli.hpp"
#include "support.hpp"

using namespace sept;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

DatasetManifest fixture_manifest(const std::string& rel) { return load_manifest(test::fixture(rel)); }
NeighborSet fixture_neighbors(const std::string& rel, const ClassSet& classes) {
    return NeighborSet::from_json(read_json_file(test::fixture(rel)), classes);
}
TemplatePool shipped_pool() { return TemplatePool::from_json(read_json_file(test::fixture("templates_100.json"))); }

Outcome gradient_suite() {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto in = test::random_instance(10000 + seed, 4, 3, 2, 8, 3);
        const Objective obj = test::objective_for(in, 3.0);
        const LossBreakdown l = total_loss(obj, in.batch, in.ctx);
        const Mat fd = test::finite_difference(in.ctx, [&](const ContextMatrix& c) { return total_loss(obj, in.batch, c).total; });
        worst = std::max(worst, test::relative_error(l.gradient, fd));
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-4 && secs < 30.0, fmt("max relative error %.3g over 50 instances in %.2f s", worst, secs)};
}

Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    double worst_margin = 0.0, worst_intra = 0.0, worst_inter = 0.0, worst_se = 0.0, worst_ce = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto in = test::random_instance(20000 + seed, 4, 3, 2, 8, 3);
        const oracle::Margins m{in.margins.values(), in.classes.size(), in.neighbors.per_class()};
        const auto naive = oracle::margin_table(in.encoder, in.classes, in.neighbors, in.pool);
        for (std::size_t k = 0; k < naive.size(); ++k) worst_margin = std::max(worst_margin, rel(in.margins.values()[k], naive[k]));
        const auto inputs = test::expansion_inputs(in);
        for (std::size_t i = 0; i < 4; ++i) {
            worst_intra = std::max(worst_intra, rel(intra_loss(inputs, i, in.ctx).loss,
                                                    oracle::intra(in.encoder, in.classes, in.neighbors, m, i, in.ctx, true)));
            for (std::size_t j = 0; j < 4; ++j)
                if (i != j)
                    worst_inter = std::max(worst_inter, rel(inter_loss(inputs, i, j, in.ctx).loss,
                                                            oracle::inter(in.encoder, in.classes, in.neighbors, m, i, j, in.ctx, true)));
        }
        worst_se = std::max(worst_se, rel(semantic_expansion_loss(inputs, in.ctx).value.loss,
                                          oracle::semantic_expansion(in.encoder, in.classes, in.neighbors, m,
                                                                     in.classes.base_indices(), in.ctx, AblationFlags::full())));
        const auto ls = in.classes.base_indices();
        worst_ce = std::max(worst_ce, rel(cross_entropy(in.encoder, in.classes, ls, in.batch, in.ctx, 0.01).loss,
                                          oracle::cross_entropy(in.encoder, in.classes, ls, in.batch, in.ctx, 0.01)));
    }
    const double secs = seconds_since(t0);
    const double worst = std::max({worst_margin, worst_intra, worst_inter, worst_se, worst_ce});
    return {worst <= 1e-12 && secs < 10.0,
            fmt("max deviation margin %.1e intra %.1e inter %.1e se %.1e ce %.1e over 100 instances in %.2f s", worst_margin,
                worst_intra, worst_inter, worst_se, worst_ce, secs)};
}

Outcome reduction() {
    setenv("SEPT_THREADS", "1", 1);
    const DatasetManifest m = fixture_manifest("tiny/manifest.json");
    const NeighborSet nb = fixture_neighbors("tiny/neighbors.json", m.classes);
    TrainConfig c;
    c.shots = 4;
    c.lambda = 0.0;
    c.mu = 0.0;
    const TrainedPrompt zero_lambda = train(m, &nb, shipped_pool(), c);
    c.lambda = 3.0;
    c.flags = AblationFlags::none();
    const TrainedPrompt flags_off = train(m, &nb, shipped_pool(), c);
    const auto ref = oracle::ce_only_training(m, c.fold, c.shots, c.epochs, c.context_len, c.lr, c.momentum, c.tau, c.seed);
    unsetenv("SEPT_THREADS");
    auto same = [&](const TrainedPrompt& t) {
        std::vector<double> h = t.loss_history;
        h.push_back(t.final_loss);
        return h == ref.losses && t.context.values() == ref.context;
    };
    const bool ok = same(zero_lambda) && same(flags_off) && c.epochs == 50;
    return {ok, fmt("%zu epochs; lambda=0 %s, flags-off %s the plain cross-entropy loop", c.epochs,
                    same(zero_lambda) ? "matches" : "differs from", same(flags_off) ? "matches" : "differs from")};
}

Outcome margin_constancy() {
    const DatasetManifest m = fixture_manifest("tiny/manifest.json");
    const NeighborSet nb = fixture_neighbors("tiny/neighbors.json", m.classes);
    const TemplatePool pool = shipped_pool();
    TrainConfig c;
    c.shots = 4;
    const MarginTable table = margins_for(m.make_encoder(), m.classes, neighbors_for(nb, c), pool, c);
    const std::uint64_t before = table.hash();
    const TrainedPrompt t = train(m, &nb, pool, c, &table);
    const bool hash_ok = table.hash() == before && t.margin_hash == before;

    std::vector<std::vector<std::string>> self;
    for (std::size_t i = 0; i < m.classes.size(); ++i) self.push_back({m.classes.name(i), "distant hum"});
    const NeighborSet own(std::move(self));
    const MarginTable st = compute_margin_table(m.make_encoder(), m.classes, own, pool);
    bool zero_ok = true;
    for (std::size_t i = 0; i < m.classes.size(); ++i) zero_ok = zero_ok && st.at(i, i, 0) == 0.0 && st.at(i, i, 1) > 0.0;
    return {hash_ok && zero_ok, fmt("hash %s across %zu epochs; self-neighbor margins %s", hex64(before).c_str(), c.epochs,
                                    zero_ok ? "exactly 0" : "nonzero")};
}

Outcome hinge_properties() {
    std::size_t negatives = 0, checked = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const std::size_t K = 2 + seed % 3;
        const auto in = test::random_instance(30000 + seed, K, 2, 2, 6, 2, false, 2, 0.05 + 0.02 * static_cast<double>(seed % 40));
        const auto inputs = test::expansion_inputs(in);
        const std::size_t i = seed % K, j = (i + 1) % K;
        for (double v : {intra_loss(inputs, i, in.ctx).loss, inter_loss(inputs, i, j, in.ctx).loss,
                         semantic_expansion_loss(inputs, in.ctx).value.loss}) {
            ++checked;
            negatives += v < 0.0;
        }
    }
    const auto fp = test::fixed_point_instance();
    const auto v = semantic_expansion_loss(test::expansion_inputs(fp), fp.ctx);
    const bool fixed_ok = v.value.loss == 0.0 && v.value.gradient.max_abs() == 0.0;
    return {negatives == 0 && fixed_ok, fmt("%zu negative of %zu values on 10000 instances; fixed point loss %.3g, |grad| %.3g",
                                            negatives, checked, v.value.loss, v.value.gradient.max_abs())};
}

Outcome harmonic() {
    const double a = harmonic_mean(50.0, 50.0), b = harmonic_mean(100.0, 0.0), c = harmonic_mean(97.27, 61.38);
    return {a == 50.0 && b == 0.0 && std::abs(c - 75.27) <= 0.01, fmt("H(50,50)=%.17g H(100,0)=%.17g H(97.27,61.38)=%.4f", a, b, c)};
}

Outcome directional() {
    const auto t0 = Clock::now();
    const DatasetManifest m = fixture_manifest("synthetic/manifest.json");
    const NeighborSet nb = fixture_neighbors("synthetic/neighbors.json", m.classes);
    TrainConfig c;
    c.neighbors = 5;
    const EvalReport sept = run_base_to_new(m, &nb, shipped_pool(), c, {0, 1, 2});
    c.lambda = 0.0;
    const EvalReport base = run_base_to_new(m, &nb, shipped_pool(), c, {0, 1, 2});
    const double secs = seconds_since(t0);
    const double gain = sept.novel - base.novel;
    return {sept.h >= base.h && gain >= 2.0 && secs < 120.0,
            fmt("H %.2f vs %.2f, new %.2f vs %.2f (gain %+.2f, need >= 2), base %.2f vs %.2f, %.1f s", sept.h, base.h,
                sept.novel, base.novel, gain, sept.base, base.base, secs)};
}

Outcome diversity_and_stats() {
    const auto enc = FrozenEncoder::create(EncoderConfig{});
    const double same = diversity_score(enc, NeighborSet({{"siren", "siren", "siren"}}), 0);
    EncoderConfig c;
    c.architecture = Architecture::pool_identity;
    c.dim = 4;
    const std::vector<std::string> words{"north", "south", "east", "west"};
    std::vector<std::pair<std::string, Vec>> rows;
    for (std::size_t k = 0; k < words.size(); ++k) {
        Vec e(4, 0.0);
        e[k] = 1.0;
        rows.emplace_back(words[k], e);
    }
    const double ortho = diversity_score(FrozenEncoder::with_injected_rows(c, rows), NeighborSet({words}), 0, "{class}");
    const DatasetManifest m = fixture_manifest("synthetic/manifest.json");
    const SimilarityStats st = neighbor_similarity_stats(m.make_encoder(), m.classes, fixture_neighbors("synthetic/neighbors.json", m.classes));
    const double gap = st.mean_positive - st.mean_negative.value_or(1.0);
    return {same == 0.0 && ortho == 1.0 && gap > 0.0,
            fmt("identical %.17g, orthogonal %.17g, positive %.3f vs negative %.3f", same, ortho, st.mean_positive,
                st.mean_negative.value_or(0.0))};
}

Outcome filter_parity() {
    const DatasetManifest m = fixture_manifest("synthetic/manifest.json");
    const NeighborSet nb = fixture_neighbors("synthetic/neighbors.json", m.classes);
    std::vector<std::string> new_names;
    for (std::size_t i : m.classes.new_indices()) new_names.push_back(m.classes.name(i));
    const FilterResult f = filter_overlapping_neighbors(nb, new_names);
    TrainConfig c;
    c.neighbors = 5;
    const EvalReport a = run_base_to_new(m, &f.neighbors, shipped_pool(), c, {0, 1, 2});
    const EvalReport b = run_base_to_new(m, &nb, shipped_pool(), c, {0, 1, 2});
    return {f.removed == 0 && a == b, fmt("%zu of %zu neighbors removed; filtered H %.4f, unfiltered H %.4f", f.removed,
                                          f.total, a.h, b.h)};
}

Outcome determinism() {
    setenv("SEPT_THREADS", "1", 1);
    const auto dir = std::filesystem::temp_directory_path() / "sept-acceptance";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto train_to = [&](const std::string& name) {
        std::ostringstream o, e;
        const std::vector<std::string> args{"train", "-m", test::fixture("tiny/manifest.json").string(), "-n",
                                            test::fixture("tiny/neighbors.json").string(), "--templates",
                                            test::fixture("templates_100.json").string(), "--shots", "4", "--seed", "7",
                                            "-o", (dir / name).string()};
        const int code = cli_main(args, o, e);
        std::ifstream in(dir / name, std::ios::binary);
        return std::make_pair(code, std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
    };
    const auto a = train_to("trained.json");
    const auto b = train_to("trained.json");
    unsetenv("SEPT_THREADS");
    std::filesystem::remove_all(dir);
    const bool ok = a.first == 0 && b.first == 0 && !a.second.empty() && a.second == b.second;
    return {ok, fmt("exit codes %d/%d, %zu and %zu bytes, %s", a.first, b.first, a.second.size(), b.second.size(),
                    ok ? "byte-identical" : "differ")};
}

}  // namespace

int main() {
    warning_sink() = nullptr;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
        {"gradient suite", gradient_suite},
        {"oracle equivalence", oracle_equivalence},
        {"reduction to plain prompt tuning", reduction},
        {"margin constancy", margin_constancy},
        {"hinge properties", hinge_properties},
        {"harmonic mean", harmonic},
        {"synthetic base-to-new (directional)", directional},
        {"diversity and similarity stats", diversity_and_stats},
        {"overlap-filter parity", filter_parity},
        {"determinism", determinism},
    };
    int failures = 0;
    for (const auto& [name, check] : checks) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    std::cout << (failures ? "FAIL " : "PASS ") << failures << " of " << checks.size() << " criteria failed" << std::endl;
    return failures ? 1 : 0;
}
