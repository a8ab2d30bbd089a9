// Classification heads, base-to-new and cross-dataset protocols, harmonic-mean
// aggregation, and neighbor-quality analytics.
#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sept/trainer.hpp"

namespace sept {

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

struct Prediction {
    std::size_t position = 0;     // index into the class subset
    std::size_t class_index = 0;  // global class index
    Vec probs;
};

/// Softmax over cos(x, w_k)/tau; argmax with lowest-index tie-break.
inline Prediction classify_embeddings(std::span<const double> x, const std::vector<Vec>& class_embeddings,
                                      const std::vector<std::size_t>& subset, double tau) {
    require(!subset.empty() && subset.size() == class_embeddings.size(), ErrorKind::shape,
            "classify: empty or inconsistent class subset");
    require(tau > 0.0, ErrorKind::config, "classify: tau must be positive");
    Vec logits(subset.size());
    for (std::size_t k = 0; k < subset.size(); ++k) logits[k] = cosine_sim(x, class_embeddings[k]) / tau;
    Prediction p;
    p.position = argmax(logits);
    p.class_index = subset[p.position];
    p.probs = stable_softmax(logits);
    return p;
}

inline std::vector<Vec> prompt_embeddings(const FrozenEncoder& enc, const ClassSet& classes,
                                          const std::vector<std::size_t>& subset, const ContextMatrix& ctx) {
    std::vector<Vec> out;
    out.reserve(subset.size());
    for (std::size_t i : subset) out.push_back(class_embedding(enc, classes, i, ctx));
    return out;
}

inline std::vector<Vec> zero_shot_embeddings(const FrozenEncoder& enc, const ClassSet& classes,
                                             const std::vector<std::size_t>& subset, const TemplatePool& pool) {
    std::vector<Vec> out;
    out.reserve(subset.size());
    for (std::size_t i : subset) out.push_back(ensemble_zero_shot_embedding(enc, classes.name(i), pool));
    return out;
}

/// Prompt-tuned prediction against z_i = g([v, E(c_i)]).
inline Prediction classify(const FrozenEncoder& enc, const ClassSet& classes, const std::vector<std::size_t>& subset,
                           std::span<const double> x, const ContextMatrix& ctx, double tau) {
    return classify_embeddings(x, prompt_embeddings(enc, classes, subset, ctx), subset, tau);
}

/// Zero-shot prediction against hand-crafted template (or ensemble) embeddings.
inline Prediction zero_shot_classify(const FrozenEncoder& enc, const ClassSet& classes,
                                     const std::vector<std::size_t>& subset, std::span<const double> x,
                                     const TemplatePool& pool, double tau = 0.01) {
    return classify_embeddings(x, zero_shot_embeddings(enc, classes, subset, pool), subset, tau);
}

/// Percentage of rows whose label is predicted, with `subset` as label space.
inline double accuracy(const EmbeddingBatch& batch, const std::vector<Vec>& class_embeddings,
                       const std::vector<std::size_t>& subset, double tau) {
    require(!batch.empty(), ErrorKind::protocol, "accuracy over an empty batch");
    std::vector<int> hits(batch.size(), 0);
    parallel_for(batch.size(), [&](std::size_t k) {
        hits[k] = classify_embeddings(batch.rows[k].x, class_embeddings, subset, tau).class_index == batch.rows[k].label;
    });
    std::size_t correct = 0;
    for (int h : hits) correct += static_cast<std::size_t>(h);
    return 100.0 * static_cast<double>(correct) / static_cast<double>(batch.size());
}

inline double harmonic_mean(double base, double novel) {
    require(base >= 0.0 && novel >= 0.0, ErrorKind::domain, "harmonic_mean: negative accuracy");
    if (base + novel == 0.0) return 0.0;
    return 2.0 * base * novel / (base + novel);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct RunRecord {
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    double base = 0.0;
    double novel = 0.0;
    double h = 0.0;
    bool operator==(const RunRecord&) const = default;
};

/// base, novel and h are averaged independently over runs; h is per-run H averaged.
struct EvalReport {
    double base = 0.0;
    double novel = 0.0;
    double h = 0.0;
    std::vector<RunRecord> runs;
    std::uint64_t config_hash = 0;

    static EvalReport aggregate(std::vector<RunRecord> runs, std::uint64_t config_hash = 0) {
        EvalReport r;
        r.runs = std::move(runs);
        r.config_hash = config_hash;
        if (r.runs.empty()) return r;
        for (const auto& x : r.runs) {
            r.base += x.base;
            r.novel += x.novel;
            r.h += x.h;
        }
        const double n = static_cast<double>(r.runs.size());
        r.base /= n;
        r.novel /= n;
        r.h /= n;
        return r;
    }
    bool operator==(const EvalReport&) const = default;
};

inline json to_json(const EvalReport& r) {
    json runs = json::array();
    for (const auto& x : r.runs)
        runs.push_back(json{{"seed", x.seed}, {"fold", x.fold}, {"base", x.base}, {"new", x.novel}, {"h", x.h}});
    return json{{"base", r.base}, {"new", r.novel}, {"h", r.h}, {"runs", runs}, {"config_hash", hex64(r.config_hash)}};
}

inline EvalReport eval_report_from_json(const json& j) {
    EvalReport r;
    r.base = j.at("base").get<double>();
    r.novel = j.at("new").get<double>();
    r.h = j.at("h").get<double>();
    r.config_hash = parse_hex64(j.at("config_hash").get<std::string>());
    for (const auto& x : j.at("runs"))
        r.runs.push_back({x.at("seed").get<std::uint64_t>(), x.at("fold").get<std::size_t>(), x.at("base").get<double>(),
                          x.at("new").get<double>(), x.at("h").get<double>()});
    return r;
}

/// One summary row followed by the per-run rows.
inline std::string to_csv(const EvalReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "kind,seed,fold,base,new,h\n";
    os << "mean,,," << r.base << ',' << r.novel << ',' << r.h << '\n';
    for (const auto& x : r.runs) os << "run," << x.seed << ',' << x.fold << ',' << x.base << ',' << x.novel << ',' << x.h << '\n';
    return os.str();
}

inline std::uint64_t config_hash(const TrainConfig& c) { return fnv1a64(to_json(c).dump()); }

// ---------------------------------------------------------------------------
// Protocols
// ---------------------------------------------------------------------------

inline void check_compatible(const TrainedPrompt& trained, const DatasetManifest& manifest, const FrozenEncoder& enc) {
    require(trained.context.dim() == manifest.dim, ErrorKind::config,
            "trained context dimension " + std::to_string(trained.context.dim()) + " != manifest dim " +
                std::to_string(manifest.dim));
    require(enc.weight_hash() == trained.encoder_hash, ErrorKind::config,
            "manifest '" + manifest.name + "' pairs with a different text encoder than the trained prompt");
}

/// Base accuracy over BASE test samples (BASE label space), new accuracy over NEW
/// test samples (NEW label space), and their harmonic mean.
inline RunRecord evaluate_base_to_new(const TrainedPrompt& trained, const DatasetManifest& manifest,
                                      std::optional<std::size_t> fold = std::nullopt) {
    const FrozenEncoder enc = manifest.make_encoder();
    check_compatible(trained, manifest, enc);
    const std::size_t f = fold.value_or(trained.config.fold);
    const auto& test = manifest.fold(f).test;
    const auto base_classes = manifest.classes.base_indices();
    const auto new_classes = manifest.classes.new_indices();
    require(!base_classes.empty() && !new_classes.empty(), ErrorKind::protocol, "base-to-new needs both splits");
    const auto base_rows = manifest.filter_split(test, Split::base);
    const auto new_rows = manifest.filter_split(test, Split::novel);
    require(!base_rows.empty(), ErrorKind::protocol, "fold " + std::to_string(f) + " has no BASE test samples");
    require(!new_rows.empty(), ErrorKind::protocol, "fold " + std::to_string(f) + " has no NEW test samples");
    RunRecord r;
    r.seed = trained.config.seed;
    r.fold = f;
    const double tau = trained.config.tau;
    r.base = accuracy(manifest.batch(base_rows), prompt_embeddings(enc, manifest.classes, base_classes, trained.context),
                      base_classes, tau);
    r.novel = accuracy(manifest.batch(new_rows), prompt_embeddings(enc, manifest.classes, new_classes, trained.context),
                       new_classes, tau);
    r.h = harmonic_mean(r.base, r.novel);
    return r;
}

/// Zero-shot accuracy of hand-crafted embeddings on one fold's test set, split-wise.
inline RunRecord zero_shot_base_to_new(const DatasetManifest& manifest, const TemplatePool& pool, std::size_t fold = 0,
                                       double tau = 0.01) {
    const FrozenEncoder enc = manifest.make_encoder();
    const auto& test = manifest.fold(fold).test;
    RunRecord r;
    r.fold = fold;
    for (Split s : {Split::base, Split::novel}) {
        const auto classes = manifest.classes.indices_of(s);
        const auto rows = manifest.filter_split(test, s);
        if (classes.empty() || rows.empty()) continue;
        const double acc = accuracy(manifest.batch(rows), zero_shot_embeddings(enc, manifest.classes, classes, pool), classes, tau);
        (s == Split::base ? r.base : r.novel) = acc;
    }
    r.h = harmonic_mean(r.base, r.novel);
    return r;
}

/// Zero-shot accuracy over the full test set of a fold with every class as label space.
inline double zero_shot_accuracy(const DatasetManifest& manifest, const TemplatePool& pool, std::size_t fold = 0,
                                 double tau = 0.01) {
    const FrozenEncoder enc = manifest.make_encoder();
    const auto classes = manifest.classes.all_indices();
    return accuracy(manifest.batch(manifest.fold(fold).test), zero_shot_embeddings(enc, manifest.classes, classes, pool),
                    classes, tau);
}

/// Trains and evaluates every (seed, fold) pair; runs execute in parallel and are
/// reported in (seed, fold) order.
inline EvalReport run_base_to_new(const DatasetManifest& manifest, const NeighborSet* neighbors,
                                  const TemplatePool& pool, const TrainConfig& base_config,
                                  const std::vector<std::uint64_t>& seeds, std::vector<std::size_t> folds = {}) {
    require(!seeds.empty(), ErrorKind::config, "at least one seed required");
    if (folds.empty())
        for (std::size_t f = 0; f < manifest.folds.size(); ++f) folds.push_back(f);
    std::vector<RunRecord> runs(seeds.size() * folds.size());
    parallel_for(runs.size(), [&](std::size_t k) {
        TrainConfig c = base_config;
        c.seed = seeds[k / folds.size()];
        c.fold = folds[k % folds.size()];
        c.scope = TrainScope::base;
        runs[k] = evaluate_base_to_new(train(manifest, neighbors, pool, c), manifest);
    });
    return EvalReport::aggregate(std::move(runs), config_hash(base_config));
}

struct CrossResult {
    double source = 0.0;
    double target = 0.0;
};

/// Source accuracy over the training fold's test set and target accuracy averaged
/// over every target fold, each with all of the dataset's classes as label space
/// and the same learned context.
inline CrossResult evaluate_cross_dataset(const TrainedPrompt& trained, const DatasetManifest& source,
                                          const DatasetManifest& target) {
    const FrozenEncoder src_enc = source.make_encoder();
    const FrozenEncoder tgt_enc = target.make_encoder();
    check_compatible(trained, source, src_enc);
    check_compatible(trained, target, tgt_enc);
    const double tau = trained.config.tau;
    CrossResult r;
    const auto src_classes = source.classes.all_indices();
    const auto& src_test = source.fold(trained.config.fold).test;
    require(!src_test.empty(), ErrorKind::protocol, "source test set is empty");
    r.source = accuracy(source.batch(src_test), prompt_embeddings(src_enc, source.classes, src_classes, trained.context),
                        src_classes, tau);
    const auto tgt_classes = target.classes.all_indices();
    const auto tgt_emb = prompt_embeddings(tgt_enc, target.classes, tgt_classes, trained.context);
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& f : target.folds) {
        if (f.test.empty()) continue;
        sum += accuracy(target.batch(f.test), tgt_emb, tgt_classes, tau);
        ++used;
    }
    require(used > 0, ErrorKind::protocol, "target dataset '" + target.name + "' has no test samples");
    r.target = sum / static_cast<double>(used);
    return r;
}

// ---------------------------------------------------------------------------
// Neighbor analytics
// ---------------------------------------------------------------------------

/// 1 - mean pairwise cosine similarity of the given embeddings.
inline double diversity_from_embeddings(const std::vector<Vec>& embeddings) {
    const std::size_t N = embeddings.size();
    require(N >= 2, ErrorKind::domain, "diversity needs at least two neighbors");
    double sum = 0.0;
    for (std::size_t a = 0; a < N; ++a)
        for (std::size_t b = a + 1; b < N; ++b) sum += cosine_sim(embeddings[a], embeddings[b]);
    const double pairs = static_cast<double>(N * (N - 1) / 2);
    return 1.0 - sum / pairs;
}

/// Diversity of class i's neighbors embedded with a single hand-crafted template.
inline double diversity_score(const FrozenEncoder& enc, const NeighborSet& neighbors, std::size_t i,
                              std::string_view tmpl = kDefaultTemplate) {
    std::vector<Vec> emb;
    for (const auto& s : neighbors.at(i)) emb.push_back(template_embedding(enc, tmpl, s));
    return diversity_from_embeddings(emb);
}

inline double dataset_diversity(const FrozenEncoder& enc, const NeighborSet& neighbors,
                                std::string_view tmpl = kDefaultTemplate) {
    require(neighbors.classes() > 0, ErrorKind::domain, "no classes");
    double sum = 0.0;
    for (std::size_t i = 0; i < neighbors.classes(); ++i) sum += diversity_score(enc, neighbors, i, tmpl);
    return sum / static_cast<double>(neighbors.classes());
}

/// Fixed-width histogram over [-1, 1]; bin k covers [-1 + k*w, -1 + (k+1)*w), the
/// last bin is closed at 1.
struct SimilarityHistogram {
    static constexpr double kWidth = 0.05;
    static constexpr std::size_t kBins = 40;
    std::vector<std::size_t> counts = std::vector<std::size_t>(kBins, 0);

    void add(double v) {
        auto k = static_cast<std::ptrdiff_t>(std::floor((v + 1.0) / kWidth));
        k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(kBins) - 1);
        ++counts[static_cast<std::size_t>(k)];
    }
    static double lower_edge(std::size_t k) { return -1.0 + kWidth * static_cast<double>(k); }
};

struct SimilarityStats {
    std::vector<double> positive;  // sim(class, own neighbor)
    std::vector<double> negative;  // sim(class, neighbor of another class)
    SimilarityHistogram positive_hist;
    SimilarityHistogram negative_hist;
    double mean_positive = 0.0;
    std::optional<double> mean_negative;  // absent with a single class
};

inline SimilarityStats neighbor_similarity_stats(const FrozenEncoder& enc, const ClassSet& classes,
                                                 const NeighborSet& neighbors, std::string_view tmpl = kDefaultTemplate) {
    require(neighbors.classes() == classes.size(), ErrorKind::data, "neighbor set does not match the class set");
    const std::size_t K = classes.size();
    std::vector<Vec> class_emb;
    std::vector<std::vector<Vec>> nb_emb(K);
    for (std::size_t i = 0; i < K; ++i) {
        class_emb.push_back(template_embedding(enc, tmpl, classes.name(i)));
        for (const auto& s : neighbors.at(i)) nb_emb[i].push_back(template_embedding(enc, tmpl, s));
    }
    SimilarityStats st;
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
            for (const auto& p : nb_emb[j]) {
                const double s = cosine_sim(class_emb[i], p);
                if (i == j) {
                    st.positive.push_back(s);
                    st.positive_hist.add(s);
                } else {
                    st.negative.push_back(s);
                    st.negative_hist.add(s);
                }
            }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    if (!st.positive.empty()) st.mean_positive = mean(st.positive);
    if (!st.negative.empty()) st.mean_negative = mean(st.negative);
    return st;
}

inline json to_json(const SimilarityStats& st) {
    json bins = json::array();
    for (std::size_t k = 0; k < SimilarityHistogram::kBins; ++k)
        bins.push_back(json{{"lower", SimilarityHistogram::lower_edge(k)},
                            {"upper", SimilarityHistogram::lower_edge(k + 1)},
                            {"positive", st.positive_hist.counts[k]},
                            {"negative", st.negative_hist.counts[k]}});
    json j{{"mean_positive", st.mean_positive},
           {"positive_pairs", st.positive.size()},
           {"negative_pairs", st.negative.size()},
           {"histogram", bins}};
    j["mean_negative"] = st.mean_negative ? json(*st.mean_negative) : json(nullptr);
    return j;
}

struct FilterResult {
    NeighborSet neighbors;
    std::size_t removed = 0;
    std::size_t total = 0;
    double fraction = 0.0;
};

/// Drops neighbors whose normalised text equals a normalised new-class name, then
/// re-pads each list to its original length from the survivors.
inline FilterResult filter_overlapping_neighbors(const NeighborSet& neighbors,
                                                 const std::vector<std::string>& new_class_names) {
    std::set<std::string> banned;
    for (const auto& n : new_class_names) banned.insert(normalize_name(n));
    FilterResult r;
    std::vector<std::vector<std::string>> kept;
    const std::size_t N = neighbors.per_class();
    for (std::size_t i = 0; i < neighbors.classes(); ++i) {
        std::vector<std::string> survivors;
        for (const auto& s : neighbors.at(i)) {
            ++r.total;
            if (banned.count(normalize_name(s))) ++r.removed;
            else survivors.push_back(s);
        }
        require(!survivors.empty(), ErrorKind::data,
                "every neighbor of class " + std::to_string(i) + " collides with a new class name");
        kept.push_back(std::move(survivors));
    }
    r.neighbors = NeighborSet(std::move(kept), N);
    r.fraction = r.total == 0 ? 0.0 : static_cast<double>(r.removed) / static_cast<double>(r.total);
    return r;
}

// ---------------------------------------------------------------------------
// Embedding dumps
// ---------------------------------------------------------------------------

/// JSON-lines rows {name, split, kind, vector} for class prompts (learned when a
/// context is given, zero-shot otherwise) and, optionally, neighbor prompts.
inline std::string dump_embeddings(const FrozenEncoder& enc, const ClassSet& classes, const ContextMatrix* ctx,
                                   const TemplatePool& pool, const NeighborSet* neighbors = nullptr) {
    std::ostringstream os;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const Vec v = ctx ? class_embedding(enc, classes, i, *ctx) : ensemble_zero_shot_embedding(enc, classes.name(i), pool);
        os << json{{"name", classes.name(i)}, {"split", to_string(classes.split(i))},
                   {"kind", ctx ? "class-prompt" : "class-zero-shot"}, {"vector", v}}.dump()
           << '\n';
        if (!neighbors) continue;
        for (const auto& s : neighbors->at(i)) {
            const Vec p = ctx ? enc.encode(learnable_prompt(enc, s, ctx->length()), ctx->values())
                              : ensemble_zero_shot_embedding(enc, s, pool);
            os << json{{"name", s}, {"split", to_string(classes.split(i))}, {"kind", "neighbor"},
                       {"class", classes.name(i)}, {"vector", p}}.dump()
               << '\n';
        }
    }
    return os.str();
}

}  // namespace sept
