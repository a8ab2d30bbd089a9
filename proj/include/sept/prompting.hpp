// Learnable context, class/neighbor/template containers, and the prompt
// embeddings built from them.
#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sept/encoder.hpp"

namespace sept {

// ---------------------------------------------------------------------------
// ContextMatrix
// ---------------------------------------------------------------------------

/// The M x d learnable prompt vectors shared by every class and neighbor prompt.
class ContextMatrix {
public:
    static constexpr double kInitStddev = 0.02;

    static ContextMatrix random(std::size_t length, std::size_t dim, SeededRng rng, double stddev = kInitStddev) {
        Mat m(length, dim);
        for (double& v : m.values()) v = rng.normal(0.0, stddev);
        return ContextMatrix(std::move(m));
    }

    static ContextMatrix zeros(std::size_t length, std::size_t dim) { return ContextMatrix(Mat(length, dim, 0.0)); }

    explicit ContextMatrix(Mat values) : values_(std::move(values)) {
        require(values_.rows() >= 1 && values_.cols() >= 1, ErrorKind::shape, "context must be at least 1x1");
        require(all_finite(values_.values()), ErrorKind::numeric, "context contains non-finite values");
    }

    std::size_t length() const noexcept { return values_.rows(); }
    std::size_t dim() const noexcept { return values_.cols(); }
    const Mat& values() const noexcept { return values_; }

    /// theta <- theta - lr * direction
    void apply_step(const Mat& direction, double lr) {
        require(direction.rows() == values_.rows() && direction.cols() == values_.cols(), ErrorKind::shape,
                "apply_step: shape mismatch");
        auto theta = values_.values();
        const auto dir = direction.values();
        for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= lr * dir[k];
    }

    bool operator==(const ContextMatrix&) const = default;

private:
    Mat values_;
};

// ---------------------------------------------------------------------------
// ClassSet
// ---------------------------------------------------------------------------

enum class Split { base, novel };

inline std::string to_string(Split s) { return s == Split::base ? "base" : "new"; }

inline Split split_from_string(std::string_view s) {
    if (s == "base") return Split::base;
    if (s == "new") return Split::novel;
    fail(ErrorKind::data, "unknown split tag '" + std::string(s) + "'");
}

/// Trimmed, lowercased form used for name comparisons.
inline std::string normalize_name(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out(s.substr(b, e - b));
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

class ClassSet {
public:
    ClassSet() = default;

    ClassSet(std::vector<std::string> names, std::vector<Split> splits)
        : names_(std::move(names)), splits_(std::move(splits)) {
        require(names_.size() == splits_.size(), ErrorKind::data, "ClassSet: names/splits length mismatch");
        std::set<std::string> seen;
        for (const auto& n : names_) {
            const auto key = normalize_name(n);
            require(!key.empty(), ErrorKind::data, "ClassSet: empty class name");
            require(seen.insert(key).second, ErrorKind::data, "ClassSet: duplicate class name '" + n + "'");
        }
    }

    /// First ceil(K/2) names are BASE, the rest NEW.
    static ClassSet half_split(std::vector<std::string> names) {
        const std::size_t base = (names.size() + 1) / 2;
        std::vector<Split> splits(names.size(), Split::novel);
        for (std::size_t k = 0; k < base; ++k) splits[k] = Split::base;
        return ClassSet(std::move(names), std::move(splits));
    }

    static ClassSet all_base(std::vector<std::string> names) {
        std::vector<Split> splits(names.size(), Split::base);
        return ClassSet(std::move(names), std::move(splits));
    }

    std::size_t size() const noexcept { return names_.size(); }
    const std::string& name(std::size_t i) const {
        require(i < names_.size(), ErrorKind::shape, "class index out of range");
        return names_[i];
    }
    Split split(std::size_t i) const {
        require(i < splits_.size(), ErrorKind::shape, "class index out of range");
        return splits_[i];
    }
    bool is_base(std::size_t i) const { return split(i) == Split::base; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<Split>& splits() const noexcept { return splits_; }

    std::vector<std::size_t> indices_of(Split s) const {
        std::vector<std::size_t> out;
        for (std::size_t k = 0; k < splits_.size(); ++k)
            if (splits_[k] == s) out.push_back(k);
        return out;
    }
    std::vector<std::size_t> base_indices() const { return indices_of(Split::base); }
    std::vector<std::size_t> new_indices() const { return indices_of(Split::novel); }
    std::vector<std::size_t> all_indices() const {
        std::vector<std::size_t> out(size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = k;
        return out;
    }

    std::optional<std::size_t> find(std::string_view name) const {
        const auto key = normalize_name(name);
        for (std::size_t k = 0; k < names_.size(); ++k)
            if (normalize_name(names_[k]) == key) return k;
        return std::nullopt;
    }

    std::uint64_t hash() const {
        Fnv1a h;
        h.u64(names_.size());
        for (std::size_t k = 0; k < names_.size(); ++k) h.str(names_[k]).str(to_string(splits_[k]));
        return h.value();
    }

    bool operator==(const ClassSet&) const = default;

private:
    std::vector<std::string> names_;
    std::vector<Split> splits_;
};

// ---------------------------------------------------------------------------
// NeighborSet
// ---------------------------------------------------------------------------

/// Per-index atomic read counters.
class ReadCounters {
public:
    explicit ReadCounters(std::size_t n) : n_(n), counts_(std::make_unique<std::atomic<std::size_t>[]>(n)) { reset(); }

    void bump(std::size_t i) {
        if (i < n_) counts_[i].fetch_add(1, std::memory_order_relaxed);
    }
    std::size_t get(std::size_t i) const { return i < n_ ? counts_[i].load(std::memory_order_relaxed) : 0; }
    void reset() {
        for (std::size_t k = 0; k < n_; ++k) counts_[k] = 0;
    }

private:
    std::size_t n_;
    std::unique_ptr<std::atomic<std::size_t>[]> counts_;
};

/// Per-class neighbor strings. Lists are padded by cyclic repetition to a
/// common length. Reads through at() are counted per class so callers can
/// verify which classes a code path touched; copies and truncations share the
/// counters of the set they came from.
class NeighborSet {
public:
    NeighborSet() = default;

    explicit NeighborSet(std::vector<std::vector<std::string>> lists, std::size_t target = 0)
        : lists_(std::move(lists)), reads_(std::make_shared<ReadCounters>(lists_.size())) {
        std::size_t n = target;
        for (const auto& l : lists_) n = std::max(n, l.size());
        for (std::size_t i = 0; i < lists_.size(); ++i) {
            auto& l = lists_[i];
            for (const auto& s : l)
                require(!normalize_name(s).empty(), ErrorKind::data, "empty neighbor string for class " + std::to_string(i));
            if (l.size() < n) {
                require(!l.empty(), ErrorKind::data, "class " + std::to_string(i) + " has no neighbors to pad from");
                log_warning("neighbors of class " + std::to_string(i) + " padded from " + std::to_string(l.size()) +
                            " to " + std::to_string(n) + " by repetition");
                const std::size_t have = l.size();
                for (std::size_t k = have; k < n; ++k) l.push_back(l[k % have]);
            }
        }
    }

    std::size_t classes() const noexcept { return lists_.size(); }
    std::size_t per_class() const noexcept { return lists_.empty() ? 0 : lists_.front().size(); }

    const std::vector<std::string>& at(std::size_t i) const {
        require(i < lists_.size(), ErrorKind::data, "no neighbor list for class " + std::to_string(i));
        if (reads_) reads_->bump(i);
        return lists_[i];
    }
    const std::string& at(std::size_t i, std::size_t n) const {
        const auto& l = at(i);
        require(n < l.size(), ErrorKind::shape, "neighbor index out of range");
        return l[n];
    }

    std::size_t reads(std::size_t i) const { return reads_ ? reads_->get(i) : 0; }
    void reset_reads() const {
        if (reads_) reads_->reset();
    }

    /// First n neighbors of every class.
    NeighborSet truncated(std::size_t n) const {
        require(n >= 1 && n <= per_class(), ErrorKind::config, "truncation length out of range");
        std::vector<std::vector<std::string>> out;
        for (const auto& l : lists_) out.emplace_back(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(n));
        NeighborSet t(std::move(out));
        t.reads_ = reads_;
        return t;
    }

    const std::vector<std::vector<std::string>>& lists() const noexcept { return lists_; }

    json to_json(const ClassSet& classes) const {
        require(classes.size() == lists_.size(), ErrorKind::shape, "NeighborSet/ClassSet size mismatch");
        json j = json::object();
        for (std::size_t i = 0; i < lists_.size(); ++i) j[classes.name(i)] = lists_[i];
        return j;
    }

    /// Reads {class-name: [strings]}; every class of `classes` must be present.
    static NeighborSet from_json(const json& j, const ClassSet& classes) {
        require(j.is_object(), ErrorKind::data, "neighbor file must be a JSON object");
        std::vector<std::vector<std::string>> lists;
        for (std::size_t i = 0; i < classes.size(); ++i) {
            const json* entry = nullptr;
            for (auto it = j.begin(); it != j.end(); ++it)
                if (normalize_name(it.key()) == normalize_name(classes.name(i))) entry = &it.value();
            require(entry != nullptr, ErrorKind::data, "missing neighbor list for class '" + classes.name(i) + "'");
            require(entry->is_array(), ErrorKind::data, "neighbor list for '" + classes.name(i) + "' is not an array");
            lists.push_back(entry->get<std::vector<std::string>>());
        }
        return NeighborSet(std::move(lists));
    }

    bool operator==(const NeighborSet& o) const { return lists_ == o.lists_; }

private:
    std::vector<std::vector<std::string>> lists_;
    std::shared_ptr<ReadCounters> reads_;
};

// ---------------------------------------------------------------------------
// TemplatePool
// ---------------------------------------------------------------------------

inline constexpr std::string_view kClassPlaceholder = "{class}";
inline constexpr std::string_view kDefaultTemplate = "This is a sound of {class}";

inline std::string fill_template(std::string_view tmpl, std::string_view name) {
    const auto pos = tmpl.find(kClassPlaceholder);
    require(pos != std::string_view::npos, ErrorKind::input, "template without {class}: '" + std::string(tmpl) + "'");
    require(tmpl.find(kClassPlaceholder, pos + 1) == std::string_view::npos, ErrorKind::input,
            "template with more than one {class}: '" + std::string(tmpl) + "'");
    std::string out(tmpl.substr(0, pos));
    out += name;
    out += tmpl.substr(pos + kClassPlaceholder.size());
    return out;
}

class TemplatePool {
public:
    TemplatePool() : TemplatePool(std::vector<std::string>{std::string(kDefaultTemplate)}) {}

    explicit TemplatePool(std::vector<std::string> templates) : templates_(std::move(templates)) {
        require(!templates_.empty(), ErrorKind::input, "template pool is empty");
        for (const auto& t : templates_) fill_template(t, "x");
    }

    static TemplatePool single(std::string_view tmpl = kDefaultTemplate) {
        return TemplatePool(std::vector<std::string>{std::string(tmpl)});
    }

    std::size_t size() const noexcept { return templates_.size(); }
    const std::string& at(std::size_t t) const { return templates_.at(t); }
    const std::vector<std::string>& templates() const noexcept { return templates_; }

    std::uint64_t hash() const {
        Fnv1a h;
        h.u64(templates_.size());
        for (const auto& t : templates_) h.str(t);
        return h.value();
    }

    json to_json() const { return json(templates_); }
    static TemplatePool from_json(const json& j) {
        require(j.is_array(), ErrorKind::data, "template pool must be a JSON array of strings");
        return TemplatePool(j.get<std::vector<std::string>>());
    }

    bool operator==(const TemplatePool&) const = default;

private:
    std::vector<std::string> templates_;
};

// ---------------------------------------------------------------------------
// Prompt embeddings
// ---------------------------------------------------------------------------

/// [v_1..v_M, E(text)]
inline PromptTokens learnable_prompt(const FrozenEncoder& enc, std::string_view text, std::size_t context_len) {
    return PromptTokens::with_context(context_len, enc.tokenize(text), enc.max_len());
}

inline Vec class_embedding(const FrozenEncoder& enc, const ClassSet& classes, std::size_t i,
                           const ContextMatrix& context) {
    return enc.encode(learnable_prompt(enc, classes.name(i), context.length()), context.values());
}

inline Vec neighbor_embedding(const FrozenEncoder& enc, const NeighborSet& neighbors, std::size_t i, std::size_t n,
                              const ContextMatrix& context) {
    return enc.encode(learnable_prompt(enc, neighbors.at(i, n), context.length()), context.values());
}

/// g(E(template with name substituted)), no learnable slots.
inline Vec template_embedding(const FrozenEncoder& enc, std::string_view tmpl, std::string_view name) {
    static const Mat kNoContext;
    return enc.encode(PromptTokens::fixed_only(enc.tokenize(fill_template(tmpl, name))), kNoContext);
}

/// Mean of the template embeddings over the pool, renormalised.
inline Vec ensemble_zero_shot_embedding(const FrozenEncoder& enc, std::string_view name, const TemplatePool& pool) {
    if (pool.size() == 1) return template_embedding(enc, pool.at(0), name);
    Vec sum(enc.dim(), 0.0);
    for (const auto& t : pool.templates()) axpy(1.0, template_embedding(enc, t, name), sum);
    for (double& v : sum) v /= static_cast<double>(pool.size());
    return normalized(sum);
}

// ---------------------------------------------------------------------------
// Audio embedding batches
// ---------------------------------------------------------------------------

struct EmbeddingRow {
    Vec x;
    std::size_t label = 0;
    Split split = Split::base;
};

struct EmbeddingBatch {
    std::vector<EmbeddingRow> rows;

    std::size_t size() const noexcept { return rows.size(); }
    bool empty() const noexcept { return rows.empty(); }
};

}  // namespace sept
