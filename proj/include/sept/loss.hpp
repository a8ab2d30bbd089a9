// Margin table and training objectives (cross-entropy, intra/inter hinge,
// semantic expansion, knowledge-guided regulariser) with analytic gradients
// with respect to the context matrix.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sept/prompting.hpp"

namespace sept {

// ---------------------------------------------------------------------------
// Flags
// ---------------------------------------------------------------------------

enum class MarginMode { ensemble, fixed_prefix };

inline std::string to_string(MarginMode m) { return m == MarginMode::ensemble ? "ensemble" : "fixed-prefix"; }

inline MarginMode margin_mode_from_string(std::string_view s) {
    if (s == "ensemble") return MarginMode::ensemble;
    if (s == "fixed-prefix" || s == "fixed_prefix") return MarginMode::fixed_prefix;
    fail(ErrorKind::config, "unknown margin mode '" + std::string(s) + "'");
}

struct AblationFlags {
    bool use_intra = true;
    bool use_inter = true;
    bool intra_margin = true;
    bool inter_margin = true;
    MarginMode margin_mode = MarginMode::ensemble;

    static AblationFlags none() { return {false, false, false, false, MarginMode::ensemble}; }
    static AblationFlags full() { return {}; }

    bool any() const noexcept { return use_intra || use_inter; }
    bool operator==(const AblationFlags&) const = default;
};

inline json to_json(const AblationFlags& f) {
    return json{{"use_intra", f.use_intra},
                {"use_inter", f.use_inter},
                {"intra_margin", f.intra_margin},
                {"inter_margin", f.inter_margin},
                {"margin_mode", to_string(f.margin_mode)}};
}

inline AblationFlags ablation_flags_from_json(const json& j) {
    AblationFlags f;
    f.use_intra = j.at("use_intra").get<bool>();
    f.use_inter = j.at("use_inter").get<bool>();
    f.intra_margin = j.at("intra_margin").get<bool>();
    f.inter_margin = j.at("inter_margin").get<bool>();
    f.margin_mode = margin_mode_from_string(j.at("margin_mode").get<std::string>());
    return f;
}

/// Repulsion target used when the inter margin is switched off: the diameter
/// of the unit sphere.
inline constexpr double kMarginFreeInterTarget = 2.0;

// ---------------------------------------------------------------------------
// MarginTable
// ---------------------------------------------------------------------------

/// m[i][j][n]: mean over templates of the L2 distance between the template
/// embeddings of class i and of neighbor n of class j. Only classes flagged
/// active were computed; reading any other entry is an error.
class MarginTable {
public:
    struct Provenance {
        MarginMode mode = MarginMode::ensemble;
        std::uint64_t pool_hash = 0;
        std::uint64_t encoder_seed = 0;
        std::uint64_t encoder_hash = 0;
        std::uint64_t classes_hash = 0;
        std::uint64_t neighbors_hash = 0;
        bool operator==(const Provenance&) const = default;
    };

    MarginTable() = default;

    MarginTable(std::size_t classes, std::size_t per_class, std::vector<double> values, std::vector<bool> active,
                Provenance provenance)
        : classes_(classes), per_class_(per_class), values_(std::move(values)), active_(std::move(active)),
          provenance_(provenance) {
        require(values_.size() == classes_ * classes_ * per_class_, ErrorKind::data, "MarginTable: value count");
        require(active_.size() == classes_, ErrorKind::data, "MarginTable: active mask length");
        for (double v : values_) require(std::isfinite(v) && v >= 0.0, ErrorKind::data, "MarginTable: negative entry");
    }

    std::size_t classes() const noexcept { return classes_; }
    std::size_t per_class() const noexcept { return per_class_; }
    const Provenance& provenance() const noexcept { return provenance_; }
    const std::vector<double>& values() const noexcept { return values_; }
    bool active(std::size_t i) const { return i < active_.size() && active_[i]; }

    double at(std::size_t i, std::size_t j, std::size_t n) const {
        require(i < classes_ && j < classes_ && n < per_class_, ErrorKind::shape, "margin index out of range");
        require(active_[i] && active_[j], ErrorKind::protocol, "margin requested for a class outside the table scope");
        return values_[(i * classes_ + j) * per_class_ + n];
    }

    std::uint64_t hash() const {
        Fnv1a h;
        h.u64(classes_).u64(per_class_).f64s(values_);
        for (bool a : active_) h.u64(a ? 1 : 0);
        h.str(to_string(provenance_.mode)).u64(provenance_.pool_hash).u64(provenance_.encoder_seed);
        h.u64(provenance_.encoder_hash).u64(provenance_.classes_hash).u64(provenance_.neighbors_hash);
        return h.value();
    }

    json to_json() const {
        std::vector<int> active(active_.begin(), active_.end());
        return json{{"K", classes_},
                    {"N", per_class_},
                    {"mode", to_string(provenance_.mode)},
                    {"pool_hash", hex64(provenance_.pool_hash)},
                    {"encoder_seed", provenance_.encoder_seed},
                    {"encoder_hash", hex64(provenance_.encoder_hash)},
                    {"classes_hash", hex64(provenance_.classes_hash)},
                    {"neighbors_hash", hex64(provenance_.neighbors_hash)},
                    {"active", active},
                    {"values", values_}};
    }

    static MarginTable from_json(const json& j) {
        Provenance p;
        p.mode = margin_mode_from_string(j.at("mode").get<std::string>());
        p.pool_hash = parse_hex64(j.at("pool_hash").get<std::string>());
        p.encoder_seed = j.at("encoder_seed").get<std::uint64_t>();
        p.encoder_hash = parse_hex64(j.at("encoder_hash").get<std::string>());
        p.classes_hash = parse_hex64(j.at("classes_hash").get<std::string>());
        p.neighbors_hash = parse_hex64(j.at("neighbors_hash").get<std::string>());
        const auto active_ints = j.at("active").get<std::vector<int>>();
        std::vector<bool> active(active_ints.begin(), active_ints.end());
        return MarginTable(j.at("K").get<std::size_t>(), j.at("N").get<std::size_t>(),
                           j.at("values").get<std::vector<double>>(), std::move(active), p);
    }

    bool operator==(const MarginTable&) const = default;

private:
    std::size_t classes_ = 0;
    std::size_t per_class_ = 0;
    std::vector<double> values_;
    std::vector<bool> active_;
    Provenance provenance_;
};

/// Hash of the neighbor lists of the classes in `scope`.
inline std::uint64_t neighbors_hash(const NeighborSet& neighbors, const std::vector<std::size_t>& scope) {
    Fnv1a h;
    h.u64(scope.size());
    for (std::size_t i : scope) {
        const auto& l = neighbors.at(i);
        h.u64(i).u64(l.size());
        for (const auto& s : l) h.str(s);
    }
    return h.value();
}

/// Templates used for margins: the pool itself, or the single default prefix.
inline TemplatePool margin_pool(MarginMode mode, const TemplatePool& pool) {
    return mode == MarginMode::ensemble ? pool : TemplatePool::single(kDefaultTemplate);
}

/// Builds m[i][j][n] for every pair of classes in `scope` (all classes when empty).
inline MarginTable compute_margin_table(const FrozenEncoder& enc, const ClassSet& classes,
                                        const NeighborSet& neighbors, const TemplatePool& pool,
                                        MarginMode mode = MarginMode::ensemble,
                                        std::vector<std::size_t> scope = {}) {
    const std::size_t K = classes.size();
    require(neighbors.classes() == K, ErrorKind::data,
            "neighbor set covers " + std::to_string(neighbors.classes()) + " classes, expected " + std::to_string(K));
    if (scope.empty()) scope = classes.all_indices();
    const TemplatePool used = margin_pool(mode, pool);
    const std::size_t T = used.size();
    const std::size_t N = neighbors.per_class();
    const std::size_t S = scope.size();

    std::vector<std::vector<std::string>> lists(S);
    for (std::size_t a = 0; a < S; ++a) lists[a] = neighbors.at(scope[a]);

    // class_emb[t][a], neighbor_emb[t][a][n]
    std::vector<std::vector<Vec>> class_emb(T, std::vector<Vec>(S));
    std::vector<std::vector<std::vector<Vec>>> neighbor_emb(T, std::vector<std::vector<Vec>>(S, std::vector<Vec>(N)));
    parallel_for(T * S, [&](std::size_t k) {
        const std::size_t t = k / S, a = k % S;
        class_emb[t][a] = template_embedding(enc, used.at(t), classes.name(scope[a]));
        for (std::size_t n = 0; n < N; ++n) neighbor_emb[t][a][n] = template_embedding(enc, used.at(t), lists[a][n]);
    });

    std::vector<double> values(K * K * N, 0.0);
    parallel_for(S * S, [&](std::size_t k) {
        const std::size_t a = k / S, b = k % S;
        for (std::size_t n = 0; n < N; ++n) {
            double sum = 0.0;
            for (std::size_t t = 0; t < T; ++t) sum += l2_dist(class_emb[t][a], neighbor_emb[t][b][n]);
            values[(scope[a] * K + scope[b]) * N + n] = sum / static_cast<double>(T);
        }
    });

    std::vector<bool> active(K, false);
    for (std::size_t i : scope) active[i] = true;
    MarginTable::Provenance p{mode, used.hash(), enc.config().seed, enc.weight_hash(), classes.hash(),
                              neighbors_hash(neighbors, scope)};
    return MarginTable(K, N, std::move(values), std::move(active), p);
}

// ---------------------------------------------------------------------------
// Loss values
// ---------------------------------------------------------------------------

struct LossValue {
    double loss = 0.0;
    Mat gradient;
};

struct LossBreakdown {
    double ce = 0.0;
    double intra = 0.0;  // (1/K) sum_i intra_i
    double inter = 0.0;  // (1/K) sum_i (1/(K-1)) sum_j inter_ij
    double se = 0.0;     // intra + inter
    double kg = 0.0;
    double total = 0.0;
    Mat gradient;
};

enum class Reduction { mean, sum };

inline std::string to_string(Reduction r) { return r == Reduction::mean ? "mean" : "sum"; }
inline Reduction reduction_from_string(std::string_view s) {
    if (s == "mean") return Reduction::mean;
    if (s == "sum") return Reduction::sum;
    fail(ErrorKind::config, "unknown reduction '" + std::string(s) + "'");
}

namespace detail {

/// One encoded prompt together with the upstream gradient accumulated for it.
struct TracedPrompt {
    PromptTokens prompt;
    EncodeTrace trace;
    Vec upstream;
};

inline TracedPrompt trace_prompt(const FrozenEncoder& enc, std::string_view text, const ContextMatrix& ctx) {
    TracedPrompt tp;
    tp.prompt = learnable_prompt(enc, text, ctx.length());
    tp.trace = enc.forward(tp.prompt, ctx.values());
    tp.upstream.assign(enc.dim(), 0.0);
    return tp;
}

inline void backprop(const FrozenEncoder& enc, const TracedPrompt& tp, Mat& grad) {
    enc.accumulate_vjp(tp.prompt, tp.trace, tp.upstream, grad);
}

/// Pull term: adds weight * max(0, d - m) (or weight * d without margin) and its gradient.
inline double pull(TracedPrompt& z, TracedPrompt& p, std::optional<double> margin, double weight) {
    const double d = l2_dist(z.trace.z, p.trace.z);
    const double active = margin ? d - *margin : d;
    if (active <= 0.0 || d <= 0.0) return margin ? std::max(0.0, active) * weight : 0.0;
    for (std::size_t r = 0; r < z.upstream.size(); ++r) {
        const double g = weight * (z.trace.z[r] - p.trace.z[r]) / d;
        z.upstream[r] += g;
        p.upstream[r] -= g;
    }
    return weight * active;
}

/// Push term: adds weight * max(0, m - d) and its gradient.
inline double push(TracedPrompt& z, TracedPrompt& p, double margin, double weight) {
    const double d = l2_dist(z.trace.z, p.trace.z);
    const double active = margin - d;
    if (active <= 0.0) return 0.0;
    if (d > 0.0) {
        for (std::size_t r = 0; r < z.upstream.size(); ++r) {
            const double g = weight * (z.trace.z[r] - p.trace.z[r]) / d;
            z.upstream[r] -= g;
            p.upstream[r] += g;
        }
    }
    return weight * active;
}

}  // namespace detail

/// Frozen inputs of the semantic-expansion terms.
struct ExpansionInputs {
    const FrozenEncoder& encoder;
    const ClassSet& classes;
    const NeighborSet& neighbors;
    const MarginTable& margins;
    AblationFlags flags;
};

/// (1/N) sum_n max(0, ||z_i - p_i^n|| - m[i][i][n]); without the intra margin the
/// plain mean distance.
inline LossValue intra_loss(const ExpansionInputs& in, std::size_t i, const ContextMatrix& ctx) {
    require(in.classes.is_base(i), ErrorKind::protocol, "intra_loss: class " + std::to_string(i) + " is not BASE");
    const auto& list = in.neighbors.at(i);
    const std::size_t N = list.size();
    LossValue out{0.0, Mat(ctx.length(), ctx.dim(), 0.0)};
    auto z = detail::trace_prompt(in.encoder, in.classes.name(i), ctx);
    const double w = 1.0 / static_cast<double>(N);
    for (std::size_t n = 0; n < N; ++n) {
        auto p = detail::trace_prompt(in.encoder, list[n], ctx);
        const std::optional<double> m =
            in.flags.intra_margin ? std::optional<double>(in.margins.at(i, i, n)) : std::nullopt;
        out.loss += detail::pull(z, p, m, w);
        detail::backprop(in.encoder, p, out.gradient);
    }
    detail::backprop(in.encoder, z, out.gradient);
    return out;
}

/// (1/N) sum_n max(0, m[i][j][n] - ||z_i - p_j^n||); without the inter margin the
/// target distance is kMarginFreeInterTarget.
inline LossValue inter_loss(const ExpansionInputs& in, std::size_t i, std::size_t j, const ContextMatrix& ctx) {
    require(i != j, ErrorKind::usage, "inter_loss: i == j");
    require(in.classes.is_base(i) && in.classes.is_base(j), ErrorKind::protocol, "inter_loss: classes must be BASE");
    const auto& list = in.neighbors.at(j);
    const std::size_t N = list.size();
    LossValue out{0.0, Mat(ctx.length(), ctx.dim(), 0.0)};
    auto z = detail::trace_prompt(in.encoder, in.classes.name(i), ctx);
    const double w = 1.0 / static_cast<double>(N);
    for (std::size_t n = 0; n < N; ++n) {
        auto p = detail::trace_prompt(in.encoder, list[n], ctx);
        const double m = in.flags.inter_margin ? in.margins.at(i, j, n) : kMarginFreeInterTarget;
        out.loss += detail::push(z, p, m, w);
        detail::backprop(in.encoder, p, out.gradient);
    }
    detail::backprop(in.encoder, z, out.gradient);
    return out;
}

struct ExpansionValue {
    double intra = 0.0;
    double inter = 0.0;
    LossValue value;  // loss == intra + inter
};

/// (1/K) sum_i [ intra_i + (1/(K-1)) sum_{j != i} inter_ij ] over the classes in
/// `scope` (the BASE classes when empty). Inter is 0 when K == 1.
inline ExpansionValue semantic_expansion_loss(const ExpansionInputs& in, const ContextMatrix& ctx,
                                              std::vector<std::size_t> scope = {}) {
    if (scope.empty()) scope = in.classes.base_indices();
    ExpansionValue out;
    out.value.gradient = Mat(ctx.length(), ctx.dim(), 0.0);
    if (!in.flags.any() || scope.empty()) return out;
    for (std::size_t i : scope)
        require(in.classes.is_base(i), ErrorKind::protocol, "semantic_expansion_loss: non-BASE class in scope");

    const std::size_t K = scope.size();
    const bool inter_on = in.flags.use_inter && K > 1;
    std::vector<detail::TracedPrompt> z;
    std::vector<std::vector<detail::TracedPrompt>> p(K);
    z.reserve(K);
    for (std::size_t a = 0; a < K; ++a) {
        z.push_back(detail::trace_prompt(in.encoder, in.classes.name(scope[a]), ctx));
        for (const auto& s : in.neighbors.at(scope[a])) p[a].push_back(detail::trace_prompt(in.encoder, s, ctx));
    }
    const double wk = 1.0 / static_cast<double>(K);
    for (std::size_t a = 0; a < K; ++a) {
        const std::size_t i = scope[a];
        if (in.flags.use_intra) {
            const std::size_t N = p[a].size();
            const double w = wk / static_cast<double>(N);
            for (std::size_t n = 0; n < N; ++n) {
                const std::optional<double> m =
                    in.flags.intra_margin ? std::optional<double>(in.margins.at(i, i, n)) : std::nullopt;
                out.intra += detail::pull(z[a], p[a][n], m, w);
            }
        }
        if (inter_on) {
            for (std::size_t b = 0; b < K; ++b) {
                if (b == a) continue;
                const std::size_t N = p[b].size();
                const double w = wk / static_cast<double>((K - 1) * N);
                for (std::size_t n = 0; n < N; ++n) {
                    const double m = in.flags.inter_margin ? in.margins.at(i, scope[b], n) : kMarginFreeInterTarget;
                    out.inter += detail::push(z[a], p[b][n], m, w);
                }
            }
        }
    }
    for (const auto& tp : z) detail::backprop(in.encoder, tp, out.value.gradient);
    for (const auto& row : p)
        for (const auto& tp : row) detail::backprop(in.encoder, tp, out.value.gradient);
    out.value.loss = out.intra + out.inter;
    return out;
}

/// -sum_x log p(y|x) with p a softmax of cos(x, z_k)/tau over `label_space`
/// (divided by |X| for Reduction::mean).
inline LossValue cross_entropy(const FrozenEncoder& enc, const ClassSet& classes,
                               const std::vector<std::size_t>& label_space, const EmbeddingBatch& batch,
                               const ContextMatrix& ctx, double tau, Reduction reduction = Reduction::mean) {
    require(tau > 0.0, ErrorKind::config, "cross_entropy: tau must be positive");
    require(!label_space.empty(), ErrorKind::protocol, "cross_entropy: empty label space");
    LossValue out{0.0, Mat(ctx.length(), ctx.dim(), 0.0)};
    if (batch.empty()) return out;

    const std::size_t K = label_space.size();
    std::vector<std::ptrdiff_t> position(classes.size(), -1);
    for (std::size_t k = 0; k < K; ++k) position[label_space[k]] = static_cast<std::ptrdiff_t>(k);

    std::vector<detail::TracedPrompt> z;
    z.reserve(K);
    for (std::size_t c : label_space) z.push_back(detail::trace_prompt(enc, classes.name(c), ctx));

    const double scale = reduction == Reduction::mean ? 1.0 / static_cast<double>(batch.size()) : 1.0;
    Vec logits(K);
    for (const auto& row : batch.rows) {
        require(row.label < classes.size() && position[row.label] >= 0, ErrorKind::protocol,
                "cross_entropy: label " + std::to_string(row.label) + " outside the training label space");
        require(row.x.size() == enc.dim(), ErrorKind::shape, "cross_entropy: audio embedding dimension");
        const auto y = static_cast<std::size_t>(position[row.label]);
        const double x_norm = norm2(row.x);
        require(x_norm > 0.0, ErrorKind::domain, "cross_entropy: zero-norm audio embedding");
        for (std::size_t k = 0; k < K; ++k) logits[k] = cosine_sim(row.x, z[k].trace.z) / tau;
        out.loss += scale * (log_sum_exp(logits) - logits[y]);
        if (K == 1) continue;
        const Vec prob = stable_softmax(logits);
        for (std::size_t k = 0; k < K; ++k) {
            const double coeff = scale * (prob[k] - (k == y ? 1.0 : 0.0)) / tau;
            if (coeff == 0.0) continue;
            const Vec& zk = z[k].trace.z;
            const double z_norm = norm2(zk);
            const double cos = dot(row.x, zk) / (x_norm * z_norm);
            for (std::size_t r = 0; r < zk.size(); ++r)
                z[k].upstream[r] += coeff * (row.x[r] / (x_norm * z_norm) - cos * zk[r] / (z_norm * z_norm));
        }
    }
    for (const auto& tp : z) detail::backprop(enc, tp, out.gradient);
    return out;
}

enum class KgMode { single, ensemble };

inline std::string to_string(KgMode m) { return m == KgMode::single ? "single" : "ensemble"; }
inline KgMode kg_mode_from_string(std::string_view s) {
    if (s == "single") return KgMode::single;
    if (s == "ensemble") return KgMode::ensemble;
    fail(ErrorKind::config, "unknown kg mode '" + std::string(s) + "'");
}

/// Hand-crafted anchors for the classes in `scope`: the first pool template, or
/// the renormalised pool ensemble.
inline std::vector<Vec> kg_anchors(const FrozenEncoder& enc, const ClassSet& classes,
                                   const std::vector<std::size_t>& scope, const TemplatePool& pool, KgMode mode) {
    std::vector<Vec> out;
    for (std::size_t i : scope)
        out.push_back(mode == KgMode::single ? template_embedding(enc, pool.at(0), classes.name(i))
                                             : ensemble_zero_shot_embedding(enc, classes.name(i), pool));
    return out;
}

/// mean_i ||z_i - anchor_i||^2 over `scope`.
inline LossValue kg_regularizer(const FrozenEncoder& enc, const ClassSet& classes,
                                const std::vector<std::size_t>& scope, const std::vector<Vec>& anchors,
                                const ContextMatrix& ctx) {
    require(scope.size() == anchors.size(), ErrorKind::shape, "kg_regularizer: one anchor per class required");
    LossValue out{0.0, Mat(ctx.length(), ctx.dim(), 0.0)};
    if (scope.empty()) return out;
    const double w = 1.0 / static_cast<double>(scope.size());
    for (std::size_t a = 0; a < scope.size(); ++a) {
        auto z = detail::trace_prompt(enc, classes.name(scope[a]), ctx);
        require(anchors[a].size() == enc.dim(), ErrorKind::shape, "kg_regularizer: anchor dimension");
        double sq = 0.0;
        for (std::size_t r = 0; r < z.upstream.size(); ++r) {
            const double diff = z.trace.z[r] - anchors[a][r];
            sq += diff * diff;
            z.upstream[r] = 2.0 * w * diff;
        }
        out.loss += w * sq;
        detail::backprop(enc, z, out.gradient);
    }
    return out;
}

inline LossValue kg_regularizer(const FrozenEncoder& enc, const ClassSet& classes, const TemplatePool& pool,
                                KgMode mode, const ContextMatrix& ctx) {
    const auto scope = classes.base_indices();
    return kg_regularizer(enc, classes, scope, kg_anchors(enc, classes, scope, pool, mode), ctx);
}

// ---------------------------------------------------------------------------
// Total objective
// ---------------------------------------------------------------------------

struct ObjectiveWeights {
    double lambda = 3.0;  // semantic expansion
    double mu = 0.0;      // knowledge-guided regulariser
    double tau = 0.01;
    Reduction reduction = Reduction::mean;
};

/// Everything the per-step loss consults apart from the batch and the context.
struct Objective {
    const FrozenEncoder& encoder;
    const ClassSet& classes;
    const NeighborSet* neighbors = nullptr;  // required when flags.any()
    const MarginTable* margins = nullptr;    // required when flags.any()
    AblationFlags flags = AblationFlags::none();
    std::vector<std::size_t> scope;          // training classes (all BASE)
    std::vector<Vec> kg_anchors;             // one per scope class, required when mu > 0
    ObjectiveWeights weights;
};

/// ce + lambda * se + mu * kg with the combined gradient. The semantic and
/// knowledge terms are skipped entirely when their weight is zero.
inline LossBreakdown total_loss(const Objective& obj, const EmbeddingBatch& batch, const ContextMatrix& ctx) {
    require(obj.weights.lambda >= 0.0 && obj.weights.mu >= 0.0, ErrorKind::config, "lambda and mu must be >= 0");
    LossBreakdown out;
    LossValue ce = cross_entropy(obj.encoder, obj.classes, obj.scope, batch, ctx, obj.weights.tau, obj.weights.reduction);
    out.ce = ce.loss;
    out.gradient = std::move(ce.gradient);
    out.total = out.ce;
    if (obj.weights.lambda > 0.0 && obj.flags.any()) {
        require(obj.neighbors && obj.margins, ErrorKind::config, "semantic expansion needs neighbors and margins");
        const ExpansionValue se =
            semantic_expansion_loss(ExpansionInputs{obj.encoder, obj.classes, *obj.neighbors, *obj.margins, obj.flags},
                                    ctx, obj.scope);
        out.intra = se.intra;
        out.inter = se.inter;
        out.se = se.value.loss;
        out.total += obj.weights.lambda * out.se;
        auto g = se.value.gradient;
        g *= obj.weights.lambda;
        out.gradient += g;
    }
    if (obj.weights.mu > 0.0) {
        LossValue kg = kg_regularizer(obj.encoder, obj.classes, obj.scope, obj.kg_anchors, ctx);
        out.kg = kg.loss;
        out.total += obj.weights.mu * out.kg;
        kg.gradient *= obj.weights.mu;
        out.gradient += kg.gradient;
    }
    return out;
}

}  // namespace sept
