// Few-shot sampling, heavy-ball SGD and the training loop for the context matrix.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sept/loss.hpp"
#include "sept/manifest.hpp"

namespace sept {

/// Which classes training may touch: the BASE split (base-to-new protocol) or
/// every class of the manifest (cross-dataset source training).
enum class TrainScope { base, all };

inline std::string to_string(TrainScope s) { return s == TrainScope::base ? "base" : "all"; }
inline TrainScope train_scope_from_string(std::string_view s) {
    if (s == "base") return TrainScope::base;
    if (s == "all") return TrainScope::all;
    fail(ErrorKind::config, "unknown train scope '" + std::string(s) + "'");
}

struct TrainConfig {
    double lr = 0.0125;
    double momentum = 0.9;
    std::size_t epochs = 50;
    std::size_t batch_size = 0;  // 0 = full batch
    std::size_t shots = 16;
    double lambda = 3.0;
    double mu = 0.0;
    double tau = 0.01;
    std::size_t context_len = 16;
    std::size_t neighbors = 10;  // first N per class; 0 = all available
    std::size_t templates = 0;   // first T of the pool; 0 = whole pool
    std::uint64_t seed = 0;
    std::size_t fold = 0;
    AblationFlags flags = AblationFlags::full();
    Reduction reduction = Reduction::mean;
    KgMode kg_mode = KgMode::single;
    TrainScope scope = TrainScope::base;

    void validate() const {
        require(lr > 0.0, ErrorKind::config, "lr must be > 0");
        require(momentum >= 0.0 && momentum < 1.0, ErrorKind::config, "momentum must be in [0, 1)");
        require(epochs >= 1, ErrorKind::config, "epochs must be >= 1");
        require(shots >= 1, ErrorKind::config, "shots must be >= 1");
        require(lambda >= 0.0 && mu >= 0.0, ErrorKind::config, "lambda and mu must be >= 0");
        require(tau > 0.0, ErrorKind::config, "tau must be > 0");
        require(context_len >= 1, ErrorKind::config, "context length must be >= 1");
    }

    /// Whether the semantic-expansion term contributes to training.
    bool uses_expansion() const { return lambda > 0.0 && flags.any(); }

    bool operator==(const TrainConfig&) const = default;
};

inline json to_json(const TrainConfig& c) {
    return json{{"lr", c.lr},
                {"momentum", c.momentum},
                {"momentum_kind", "heavy-ball"},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"shots", c.shots},
                {"lambda", c.lambda},
                {"mu", c.mu},
                {"tau", c.tau},
                {"context_len", c.context_len},
                {"neighbors", c.neighbors},
                {"templates", c.templates},
                {"seed", c.seed},
                {"fold", c.fold},
                {"flags", to_json(c.flags)},
                {"ce_reduction", to_string(c.reduction)},
                {"kg_mode", to_string(c.kg_mode)},
                {"scope", to_string(c.scope)}};
}

inline TrainConfig train_config_from_json(const json& j) {
    TrainConfig c;
    c.lr = j.at("lr").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.shots = j.at("shots").get<std::size_t>();
    c.lambda = j.at("lambda").get<double>();
    c.mu = j.at("mu").get<double>();
    c.tau = j.at("tau").get<double>();
    c.context_len = j.at("context_len").get<std::size_t>();
    c.neighbors = j.at("neighbors").get<std::size_t>();
    c.templates = j.at("templates").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.fold = j.at("fold").get<std::size_t>();
    c.flags = ablation_flags_from_json(j.at("flags"));
    c.reduction = reduction_from_string(j.at("ce_reduction").get<std::string>());
    c.kg_mode = kg_mode_from_string(j.at("kg_mode").get<std::string>());
    c.scope = train_scope_from_string(j.at("scope").get<std::string>());
    return c;
}

// ---------------------------------------------------------------------------
// Few-shot sampling
// ---------------------------------------------------------------------------

struct FewShotSample {
    std::vector<std::size_t> classes;               // training class indices
    std::vector<std::vector<std::size_t>> indices;  // per class, sorted sample indices

    std::vector<std::size_t> flattened() const {
        std::vector<std::size_t> out;
        for (const auto& l : indices) out.insert(out.end(), l.begin(), l.end());
        return out;
    }
    bool operator==(const FewShotSample&) const = default;
};

/// Draws up to `shots` training samples per class without replacement from the
/// fold's train partition. Classes with fewer samples contribute all of them.
inline FewShotSample sample_few_shot(const DatasetManifest& manifest, std::size_t fold,
                                     const std::vector<std::size_t>& classes, std::size_t shots,
                                     std::uint64_t seed) {
    require(shots >= 1, ErrorKind::config, "shots must be >= 1");
    const Fold& f = manifest.fold(fold);
    SeededRng rng(seed);
    FewShotSample out;
    out.classes = classes;
    for (std::size_t c : classes) {
        std::vector<std::size_t> pool;
        for (std::size_t k : f.train)
            if (manifest.samples[k].label == c) pool.push_back(k);
        require(!pool.empty(), ErrorKind::data,
                "class '" + manifest.classes.name(c) + "' has no training samples in fold " + std::to_string(fold));
        if (pool.size() <= shots) {
            if (pool.size() < shots)
                log_warning("class '" + manifest.classes.name(c) + "' has only " + std::to_string(pool.size()) +
                            " training samples (< " + std::to_string(shots) + " shots)");
        } else {
            SeededRng class_rng = rng.split(c);
            class_rng.shuffle(pool);
            pool.resize(shots);
            std::sort(pool.begin(), pool.end());
        }
        out.indices.push_back(std::move(pool));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Optimiser
// ---------------------------------------------------------------------------

struct OptimizerState {
    Mat velocity;
    std::size_t steps = 0;

    static OptimizerState zeros_like(const ContextMatrix& ctx) { return {Mat(ctx.length(), ctx.dim(), 0.0), 0}; }
};

/// Heavy-ball momentum: v <- momentum * v + g; theta <- theta - lr * v.
inline void sgd_step(ContextMatrix& ctx, const Mat& gradient, OptimizerState& state, double lr, double momentum) {
    require(gradient.rows() == ctx.length() && gradient.cols() == ctx.dim(), ErrorKind::shape,
            "sgd_step: gradient shape differs from context");
    require(state.velocity.rows() == ctx.length() && state.velocity.cols() == ctx.dim(), ErrorKind::shape,
            "sgd_step: velocity shape differs from context");
    const auto g = gradient.values();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!std::isfinite(g[k])) {
            std::size_t bad = 0;
            for (double v : g) bad += std::isfinite(v) ? 0 : 1;
            fail(ErrorKind::numeric, "sgd_step " + std::to_string(state.steps) + ": " + std::to_string(bad) +
                                         " non-finite gradient entries, first at (" + std::to_string(k / ctx.dim()) +
                                         ", " + std::to_string(k % ctx.dim()) + ") = " + std::to_string(g[k]));
        }
    }
    auto v = state.velocity.values();
    for (std::size_t k = 0; k < g.size(); ++k) v[k] = momentum * v[k] + g[k];
    ctx.apply_step(state.velocity, lr);
    ++state.steps;
}

// ---------------------------------------------------------------------------
// Trained prompt
// ---------------------------------------------------------------------------

struct TrainedPrompt {
    TrainConfig config;
    ContextMatrix context = ContextMatrix::zeros(1, 1);
    EncoderConfig encoder;
    std::uint64_t encoder_hash = 0;
    std::uint64_t margin_hash = 0;  // 0 when no margin table was used
    std::uint64_t pool_hash = 0;
    ClassSet classes;               // class list of the training manifest
    std::vector<double> loss_history;  // total loss on the few-shot set before each epoch
    double final_loss = 0.0;           // total loss on the few-shot set after training
    FewShotSample few_shot;

    /// Hash of the learned state only (context, loss trajectory).
    std::uint64_t state_hash() const {
        Fnv1a h;
        h.f64s(context.values().values()).f64s(loss_history).f64(final_loss);
        return h.value();
    }

    bool operator==(const TrainedPrompt&) const = default;
};

inline json to_json(const TrainedPrompt& t) {
    json few = json::array();
    for (std::size_t k = 0; k < t.few_shot.classes.size(); ++k)
        few.push_back(json{{"class", t.few_shot.classes[k]}, {"samples", t.few_shot.indices[k]}});
    json classes = json::array();
    for (std::size_t k = 0; k < t.classes.size(); ++k)
        classes.push_back(json{{"name", t.classes.name(k)}, {"split", to_string(t.classes.split(k))}});
    const auto vals = t.context.values().values();
    return json{{"config", to_json(t.config)},
                {"seeds", json{{"train", t.config.seed}, {"encoder", t.encoder.seed}, {"rng", SeededRng::kAlgorithm}}},
                {"encoder", to_json(t.encoder)},
                {"encoder_hash", hex64(t.encoder_hash)},
                {"margin_hash", hex64(t.margin_hash)},
                {"pool_hash", hex64(t.pool_hash)},
                {"classes", classes},
                {"context", json{{"rows", t.context.length()},
                                 {"cols", t.context.dim()},
                                 {"values", std::vector<double>(vals.begin(), vals.end())}}},
                {"loss_history", t.loss_history},
                {"final_loss", t.final_loss},
                {"few_shot", few},
                {"state_hash", hex64(t.state_hash())}};
}

inline TrainedPrompt trained_prompt_from_json(const json& j) {
    TrainedPrompt t;
    t.config = train_config_from_json(j.at("config"));
    t.encoder = encoder_config_from_json(j.at("encoder"));
    t.encoder_hash = parse_hex64(j.at("encoder_hash").get<std::string>());
    t.margin_hash = parse_hex64(j.at("margin_hash").get<std::string>());
    t.pool_hash = parse_hex64(j.at("pool_hash").get<std::string>());
    std::vector<std::string> names;
    std::vector<Split> splits;
    for (const auto& c : j.at("classes")) {
        names.push_back(c.at("name").get<std::string>());
        splits.push_back(split_from_string(c.at("split").get<std::string>()));
    }
    t.classes = ClassSet(std::move(names), std::move(splits));
    const auto& ctx = j.at("context");
    t.context = ContextMatrix(Mat(ctx.at("rows").get<std::size_t>(), ctx.at("cols").get<std::size_t>(),
                                  ctx.at("values").get<std::vector<double>>()));
    t.loss_history = j.at("loss_history").get<std::vector<double>>();
    t.final_loss = j.at("final_loss").get<double>();
    for (const auto& f : j.at("few_shot")) {
        t.few_shot.classes.push_back(f.at("class").get<std::size_t>());
        t.few_shot.indices.push_back(f.at("samples").get<std::vector<std::size_t>>());
    }
    return t;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Frozen training inputs resolved from a manifest and a config.
struct TrainingSetup {
    FrozenEncoder encoder;
    ClassSet classes;                 // training view (all BASE for TrainScope::all)
    std::vector<std::size_t> scope;   // training classes
    TemplatePool pool;                // first T templates
    std::optional<NeighborSet> neighbors;
    std::optional<MarginTable> margins;
    std::vector<Vec> anchors;

    Objective objective(const TrainConfig& config) const {
        return Objective{encoder,
                         classes,
                         neighbors ? &*neighbors : nullptr,
                         margins ? &*margins : nullptr,
                         config.uses_expansion() ? config.flags : AblationFlags::none(),
                         scope,
                         anchors,
                         ObjectiveWeights{config.lambda, config.mu, config.tau, config.reduction}};
    }
};

inline ClassSet training_classes(const ClassSet& classes, TrainScope scope) {
    return scope == TrainScope::base ? classes : ClassSet::all_base(classes.names());
}

/// Builds the margin table a config needs, over the training classes only.
inline MarginTable margins_for(const FrozenEncoder& enc, const ClassSet& manifest_classes,
                               const NeighborSet& neighbors, const TemplatePool& pool, const TrainConfig& config) {
    const ClassSet classes = training_classes(manifest_classes, config.scope);
    return compute_margin_table(enc, classes, neighbors, pool, config.flags.margin_mode, classes.base_indices());
}

inline NeighborSet neighbors_for(const NeighborSet& neighbors, const TrainConfig& config) {
    if (config.neighbors == 0 || config.neighbors >= neighbors.per_class()) {
        if (config.neighbors > neighbors.per_class())
            log_warning("requested " + std::to_string(config.neighbors) + " neighbors, only " +
                        std::to_string(neighbors.per_class()) + " available");
        return neighbors;
    }
    return neighbors.truncated(config.neighbors);
}

inline TemplatePool pool_for(const TemplatePool& pool, const TrainConfig& config) {
    if (config.templates == 0 || config.templates >= pool.size()) return pool;
    return TemplatePool(std::vector<std::string>(pool.templates().begin(),
                                                 pool.templates().begin() + static_cast<std::ptrdiff_t>(config.templates)));
}

inline TrainingSetup prepare_training(const DatasetManifest& manifest, const NeighborSet* neighbors,
                                      const TemplatePool& pool, const TrainConfig& config,
                                      const MarginTable* margins = nullptr) {
    config.validate();
    TrainingSetup s{manifest.make_encoder(), training_classes(manifest.classes, config.scope), {},
                    pool_for(pool, config), std::nullopt, std::nullopt, {}};
    require(s.encoder.dim() == manifest.dim, ErrorKind::config, "encoder dim differs from manifest dim");
    s.scope = s.classes.base_indices();
    require(!s.scope.empty(), ErrorKind::protocol, "no BASE classes to train on");
    if (config.uses_expansion()) {
        require(neighbors != nullptr, ErrorKind::config, "semantic expansion requires a neighbor set");
        require(neighbors->classes() == manifest.classes.size(), ErrorKind::data,
                "neighbor set does not cover every manifest class");
        s.neighbors = neighbors_for(*neighbors, config);
        const MarginTable::Provenance expected{config.flags.margin_mode,
                                               margin_pool(config.flags.margin_mode, s.pool).hash(),
                                               s.encoder.config().seed,
                                               s.encoder.weight_hash(),
                                               s.classes.hash(),
                                               neighbors_hash(*s.neighbors, s.scope)};
        if (margins) {
            const auto& p = margins->provenance();
            require(p.pool_hash == expected.pool_hash, ErrorKind::config, "margin table pool hash mismatch");
            require(p.encoder_seed == expected.encoder_seed && p.encoder_hash == expected.encoder_hash,
                    ErrorKind::config, "margin table encoder mismatch");
            require(p.mode == expected.mode, ErrorKind::config, "margin table mode mismatch");
            require(p.classes_hash == expected.classes_hash && p.neighbors_hash == expected.neighbors_hash,
                    ErrorKind::config, "margin table built for different classes or neighbors");
            require(margins->per_class() == s.neighbors->per_class(), ErrorKind::config, "margin table N mismatch");
            for (std::size_t i : s.scope)
                require(margins->active(i), ErrorKind::config, "margin table lacks a training class");
            s.margins = *margins;
        } else {
            s.margins = compute_margin_table(s.encoder, s.classes, *s.neighbors, s.pool, config.flags.margin_mode, s.scope);
        }
    }
    if (config.mu > 0.0) s.anchors = kg_anchors(s.encoder, s.classes, s.scope, s.pool, config.kg_mode);
    return s;
}

/// Optimises a fresh context on the few-shot sample of `config.fold`. Streams
/// derived from config.seed: 1 context init, 2 few-shot draw, 3 epoch shuffles.
inline TrainedPrompt train(const DatasetManifest& manifest, const NeighborSet* neighbors, const TemplatePool& pool,
                           const TrainConfig& config, const MarginTable* margins = nullptr) {
    const TrainingSetup setup = prepare_training(manifest, neighbors, pool, config, margins);
    const Objective objective = setup.objective(config);
    const SeededRng root(config.seed);

    TrainedPrompt out;
    out.config = config;
    out.encoder = setup.encoder.config();
    out.encoder_hash = setup.encoder.weight_hash();
    out.margin_hash = setup.margins ? setup.margins->hash() : 0;
    out.pool_hash = setup.pool.hash();
    out.classes = manifest.classes;
    out.few_shot = sample_few_shot(manifest, config.fold, setup.scope, config.shots, root.split(2).next_u64());

    ContextMatrix ctx = ContextMatrix::random(config.context_len, manifest.dim, root.split(1));
    OptimizerState state = OptimizerState::zeros_like(ctx);
    SeededRng shuffle_rng = root.split(3);

    std::vector<std::size_t> order = out.few_shot.flattened();
    const EmbeddingBatch full = manifest.batch(order);
    const std::size_t batch_size = config.batch_size == 0 ? order.size() : std::min(config.batch_size, order.size());

    auto checked = [](const LossBreakdown& l, std::size_t epoch) {
        require(std::isfinite(l.total), ErrorKind::numeric,
                "non-finite loss at epoch " + std::to_string(epoch) + " (ce=" + std::to_string(l.ce) +
                    ", se=" + std::to_string(l.se) + ", kg=" + std::to_string(l.kg) + ")");
    };

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (batch_size == order.size()) {
            // Full batch: the step loss is the pre-epoch loss on the whole sample.
            const LossBreakdown l = total_loss(objective, full, ctx);
            checked(l, epoch);
            out.loss_history.push_back(l.total);
            sgd_step(ctx, l.gradient, state, config.lr, config.momentum);
            continue;
        }
        shuffle_rng.shuffle(order);
        const LossBreakdown start = total_loss(objective, full, ctx);
        checked(start, epoch);
        out.loss_history.push_back(start.total);
        for (std::size_t b = 0; b < order.size(); b += batch_size) {
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(b),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), b + batch_size)));
            const LossBreakdown l = total_loss(objective, manifest.batch(idx), ctx);
            checked(l, epoch);
            sgd_step(ctx, l.gradient, state, config.lr, config.momentum);
        }
    }
    const LossBreakdown last = total_loss(objective, full, ctx);
    checked(last, config.epochs);
    out.final_loss = last.total;
    out.context = std::move(ctx);
    return out;
}

}  // namespace sept
