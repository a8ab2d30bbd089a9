// Frozen toy text encoder: hash tokenizer, token-embedding table and a
// mean-pool -> tanh MLP -> L2-normalise network, plus its vector-Jacobian
// product with respect to the learnable context rows.
#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sept/numerics.hpp"

namespace sept {

using json = nlohmann::ordered_json;
using TokenId = std::uint32_t;

// ---------------------------------------------------------------------------
// Base64 for little-endian f64 weight blobs
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::string_view kBase64Alphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string base64_encode(const std::vector<unsigned char>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t k = 0;
    for (; k + 2 < bytes.size(); k += 3) {
        const std::uint32_t v = (bytes[k] << 16) | (bytes[k + 1] << 8) | bytes[k + 2];
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += kBase64Alphabet[(v >> 6) & 63];
        out += kBase64Alphabet[v & 63];
    }
    if (k < bytes.size()) {
        std::uint32_t v = bytes[k] << 16;
        if (k + 1 < bytes.size()) v |= bytes[k + 1] << 8;
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += (k + 1 < bytes.size()) ? kBase64Alphabet[(v >> 6) & 63] : '=';
        out += '=';
    }
    return out;
}

inline std::vector<unsigned char> base64_decode(std::string_view text) {
    auto value_of = [](char c) -> int {
        const auto pos = kBase64Alphabet.find(c);
        return pos == std::string_view::npos ? -1 : static_cast<int>(pos);
    };
    require(text.size() % 4 == 0, ErrorKind::parse, "base64: length not a multiple of 4");
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t k = 0; k < text.size(); k += 4) {
        int v[4];
        int pad = 0;
        for (int j = 0; j < 4; ++j) {
            const char c = text[k + static_cast<std::size_t>(j)];
            if (c == '=') {
                v[j] = 0;
                ++pad;
            } else {
                v[j] = value_of(c);
                require(v[j] >= 0 && pad == 0, ErrorKind::parse, "base64: invalid character");
            }
        }
        const std::uint32_t word = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out.push_back(static_cast<unsigned char>(word >> 16));
        if (pad < 2) out.push_back(static_cast<unsigned char>(word >> 8));
        if (pad < 1) out.push_back(static_cast<unsigned char>(word));
    }
    return out;
}

}  // namespace detail

inline std::string encode_f64_blob(std::span<const double> values) {
    std::vector<unsigned char> bytes(values.size() * 8);
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::uint64_t bits;
        std::memcpy(&bits, &values[k], 8);
        for (int b = 0; b < 8; ++b) bytes[k * 8 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
    }
    return detail::base64_encode(bytes);
}

inline std::vector<double> decode_f64_blob(std::string_view text) {
    const auto bytes = detail::base64_decode(text);
    require(bytes.size() % 8 == 0, ErrorKind::parse, "f64 blob: byte count not a multiple of 8");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[k * 8 + static_cast<std::size_t>(b)]) << (8 * b);
        std::memcpy(&out[k], &bits, 8);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

/// Splits on ASCII whitespace and punctuation, lowercases, and maps each token to
/// fnv1a64(token) mod vocab. Output is truncated to max_len ids.
class Tokenizer {
public:
    Tokenizer(std::size_t vocab, std::size_t max_len, bool lowercase = true)
        : vocab_(vocab), max_len_(max_len), lowercase_(lowercase) {
        require(vocab_ > 0 && max_len_ > 0, ErrorKind::config, "Tokenizer: vocab and max_len must be positive");
    }

    std::size_t vocab() const noexcept { return vocab_; }
    std::size_t max_len() const noexcept { return max_len_; }
    bool lowercase() const noexcept { return lowercase_; }

    std::vector<std::string> words(std::string_view text) const {
        std::vector<std::string> out;
        std::string current;
        for (char ch : text) {
            const auto c = static_cast<unsigned char>(ch);
            if (std::isspace(c) || std::ispunct(c)) {
                if (!current.empty()) out.push_back(std::move(current));
                current.clear();
            } else {
                current += lowercase_ ? static_cast<char>(std::tolower(c)) : ch;
            }
        }
        if (!current.empty()) out.push_back(std::move(current));
        return out;
    }

    TokenId token_id(std::string_view word) const { return static_cast<TokenId>(fnv1a64(word) % vocab_); }

    std::vector<TokenId> tokenize(std::string_view text) const {
        const auto ws = words(text);
        require(!ws.empty(), ErrorKind::input, "tokenize: empty or separator-only text '" + std::string(text) + "'");
        std::vector<TokenId> ids;
        for (const auto& w : ws) {
            if (ids.size() == max_len_) break;
            ids.push_back(token_id(w));
        }
        return ids;
    }

private:
    std::size_t vocab_;
    std::size_t max_len_;
    bool lowercase_;
};

// ---------------------------------------------------------------------------
// Prompt token sequences
// ---------------------------------------------------------------------------

struct Slot {
    enum class Kind { learnable, fixed };
    Kind kind;
    std::size_t index;  // context row for learnable, token id for fixed

    static Slot learnable(std::size_t m) { return {Kind::learnable, m}; }
    static Slot fixed(TokenId id) { return {Kind::fixed, id}; }
    bool operator==(const Slot&) const = default;
};

struct PromptTokens {
    std::vector<Slot> slots;

    /// [LEARNABLE(0..M-1), FIXED(tokens...)], fixed tail truncated so the total fits max_len.
    static PromptTokens with_context(std::size_t context_len, std::span<const TokenId> tokens, std::size_t max_len) {
        require(context_len < max_len, ErrorKind::config, "context length must leave room for at least one token");
        require(!tokens.empty(), ErrorKind::input, "prompt without tokens");
        PromptTokens p;
        for (std::size_t m = 0; m < context_len; ++m) p.slots.push_back(Slot::learnable(m));
        for (std::size_t k = 0; k < tokens.size() && p.slots.size() < max_len; ++k) p.slots.push_back(Slot::fixed(tokens[k]));
        return p;
    }

    static PromptTokens fixed_only(std::span<const TokenId> tokens) {
        require(!tokens.empty(), ErrorKind::input, "prompt without tokens");
        PromptTokens p;
        for (TokenId t : tokens) p.slots.push_back(Slot::fixed(t));
        return p;
    }

    bool has_learnable() const {
        return std::any_of(slots.begin(), slots.end(), [](const Slot& s) { return s.kind == Slot::Kind::learnable; });
    }
};

// ---------------------------------------------------------------------------
// Token table
// ---------------------------------------------------------------------------

/// V x d embedding matrix, frozen once built.
class TokenTable {
public:
    static TokenTable random(std::size_t vocab, std::size_t dim, SeededRng rng) {
        Mat m(vocab, dim);
        const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
        for (double& v : m.values()) v = rng.normal(0.0, sd);
        return TokenTable(std::move(m));
    }

    explicit TokenTable(Mat weights) : weights_(std::move(weights)) {
        require(all_finite(weights_.values()), ErrorKind::numeric, "TokenTable: non-finite weights");
    }

    std::size_t vocab() const noexcept { return weights_.rows(); }
    std::size_t dim() const noexcept { return weights_.cols(); }
    std::span<const double> row(TokenId id) const {
        require(id < weights_.rows(), ErrorKind::shape, "token id out of range");
        return weights_.row(id);
    }
    const Mat& weights() const noexcept { return weights_; }

private:
    Mat weights_;
};

// ---------------------------------------------------------------------------
// Frozen encoder
// ---------------------------------------------------------------------------

enum class Architecture {
    pool_mlp_tanh,  // mean-pool -> W1,b1 -> tanh -> W2,b2 -> L2 normalise
    pool_identity,  // mean-pool -> L2 normalise; zero positions (embedding-injection fixtures)
};

inline std::string to_string(Architecture a) {
    return a == Architecture::pool_mlp_tanh ? "pool-mlp-tanh-v1" : "pool-identity-v1";
}

inline Architecture architecture_from_string(std::string_view s) {
    if (s == "pool-mlp-tanh-v1") return Architecture::pool_mlp_tanh;
    if (s == "pool-identity-v1") return Architecture::pool_identity;
    fail(ErrorKind::config, "unknown encoder architecture '" + std::string(s) + "'");
}

struct EncoderConfig {
    Architecture architecture = Architecture::pool_mlp_tanh;
    std::uint64_t seed = 42;
    std::size_t vocab = 8192;
    std::size_t dim = 32;
    std::size_t hidden = 64;
    std::size_t max_len = 32;
    bool lowercase = true;

    bool operator==(const EncoderConfig&) const = default;
};

inline json to_json(const EncoderConfig& c) {
    return json{{"architecture", to_string(c.architecture)},
                {"seed", c.seed},
                {"vocab", c.vocab},
                {"dim", c.dim},
                {"hidden", c.hidden},
                {"max_len", c.max_len},
                {"lowercase", c.lowercase}};
}

inline EncoderConfig encoder_config_from_json(const json& j) {
    EncoderConfig c;
    c.architecture = architecture_from_string(j.at("architecture").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.vocab = j.at("vocab").get<std::size_t>();
    c.dim = j.at("dim").get<std::size_t>();
    c.hidden = j.value("hidden", c.hidden);
    c.max_len = j.value("max_len", c.max_len);
    c.lowercase = j.value("lowercase", true);
    return c;
}

/// Intermediate values of one forward pass, reused by the VJP.
struct EncodeTrace {
    Vec pooled;
    Vec hidden;  // tanh activations (empty for the identity architecture)
    Vec out;     // pre-normalisation output
    double out_norm = 0.0;
    Vec z;       // unit output
};

class FrozenEncoder {
public:
    static FrozenEncoder create(const EncoderConfig& config) {
        const SeededRng root(config.seed);
        const std::size_t d = config.dim;
        FrozenEncoder enc(config, TokenTable::random(config.vocab, d, root.split(1)));
        if (config.architecture == Architecture::pool_mlp_tanh) {
            require(config.hidden > 0, ErrorKind::config, "hidden width must be positive");
            enc.positional_ = gaussian(config.max_len, d, 0.1 / std::sqrt(static_cast<double>(d)), root.split(2));
            enc.w1_ = gaussian(config.hidden, d, 1.0 / std::sqrt(static_cast<double>(d)), root.split(3));
            enc.b1_ = Vec(config.hidden, 0.0);
            enc.w2_ = gaussian(d, config.hidden, 1.0 / std::sqrt(static_cast<double>(config.hidden)), root.split(4));
            enc.b2_ = Vec(d, 0.0);
        } else {
            enc.positional_ = Mat(config.max_len, d, 0.0);
        }
        return enc;
    }

    /// Builds an encoder whose token rows for the given single-token words are
    /// replaced by the supplied vectors. Used for geometry fixtures.
    static FrozenEncoder with_injected_rows(const EncoderConfig& config,
                                            const std::vector<std::pair<std::string, Vec>>& rows) {
        FrozenEncoder base = create(config);
        Mat table = base.table_.weights();
        std::map<TokenId, std::string> used;
        for (const auto& [word, vec] : rows) {
            const auto ids = base.tokenizer_.tokenize(word);
            require(ids.size() == 1, ErrorKind::input, "injected word must be a single token: '" + word + "'");
            require(vec.size() == config.dim, ErrorKind::shape, "injected vector has wrong length");
            const auto [it, fresh] = used.emplace(ids[0], word);
            require(fresh || it->second == word, ErrorKind::input,
                    "injected words '" + word + "' and '" + it->second + "' share a token id");
            std::copy(vec.begin(), vec.end(), table.row(ids[0]).begin());
        }
        base.table_ = TokenTable(std::move(table));
        return base;
    }

    const EncoderConfig& config() const noexcept { return config_; }
    const Tokenizer& tokenizer() const noexcept { return tokenizer_; }
    const TokenTable& token_table() const noexcept { return table_; }
    std::size_t dim() const noexcept { return config_.dim; }
    std::size_t max_len() const noexcept { return config_.max_len; }

    std::vector<TokenId> tokenize(std::string_view text) const { return tokenizer_.tokenize(text); }

    EncodeTrace forward(const PromptTokens& prompt, const Mat& context) const {
        const std::size_t d = dim();
        const std::size_t slots = prompt.slots.size();
        require(slots > 0, ErrorKind::shape, "encode: empty prompt");
        require(slots <= config_.max_len, ErrorKind::shape, "encode: prompt longer than max_len");
        EncodeTrace tr;
        tr.pooled.assign(d, 0.0);
        for (std::size_t k = 0; k < slots; ++k) {
            const Slot& s = prompt.slots[k];
            if (s.kind == Slot::Kind::learnable) {
                require(s.index < context.rows(), ErrorKind::shape, "encode: learnable slot index out of range");
                require(context.cols() == d, ErrorKind::shape, "encode: context width != encoder dim");
                axpy(1.0, context.row(s.index), tr.pooled);
            } else {
                axpy(1.0, table_.row(static_cast<TokenId>(s.index)), tr.pooled);
            }
            axpy(1.0, positional_.row(k), tr.pooled);
        }
        const double inv = 1.0 / static_cast<double>(slots);
        for (double& v : tr.pooled) v *= inv;

        if (config_.architecture == Architecture::pool_mlp_tanh) {
            tr.hidden = matvec(w1_, tr.pooled);
            for (std::size_t r = 0; r < tr.hidden.size(); ++r) tr.hidden[r] = std::tanh(tr.hidden[r] + b1_[r]);
            tr.out = matvec(w2_, tr.hidden);
            for (std::size_t r = 0; r < d; ++r) tr.out[r] += b2_[r];
        } else {
            tr.out = tr.pooled;
        }
        tr.out_norm = norm2(tr.out);
        require(tr.out_norm > 0.0, ErrorKind::domain, "encode: zero-norm output");
        tr.z = scaled(tr.out, 1.0 / tr.out_norm);
        return tr;
    }

    Vec encode(const PromptTokens& prompt, const Mat& context) const { return forward(prompt, context).z; }

    /// Accumulates d<upstream, encode(prompt, context)>/d context into grad.
    void accumulate_vjp(const PromptTokens& prompt, const EncodeTrace& tr, std::span<const double> upstream,
                        Mat& grad) const {
        const std::size_t d = dim();
        require(upstream.size() == d, ErrorKind::shape, "encode_vjp: upstream length != dim");
        if (!prompt.has_learnable()) return;
        // Jacobian of x / ||x||: (I - z z^T) / ||x||
        const double zu = dot(tr.z, upstream);
        Vec g_out(d);
        for (std::size_t r = 0; r < d; ++r) g_out[r] = (upstream[r] - tr.z[r] * zu) / tr.out_norm;

        Vec g_pooled;
        if (config_.architecture == Architecture::pool_mlp_tanh) {
            Vec g_hidden = matvec_transposed(w2_, g_out);
            for (std::size_t r = 0; r < g_hidden.size(); ++r) g_hidden[r] *= 1.0 - tr.hidden[r] * tr.hidden[r];
            g_pooled = matvec_transposed(w1_, g_hidden);
        } else {
            g_pooled = std::move(g_out);
        }
        const double inv = 1.0 / static_cast<double>(prompt.slots.size());
        for (const Slot& s : prompt.slots) {
            if (s.kind != Slot::Kind::learnable) continue;
            require(s.index < grad.rows() && grad.cols() == d, ErrorKind::shape, "encode_vjp: gradient shape");
            axpy(inv, g_pooled, grad.row(s.index));
        }
    }

    Mat encode_vjp(const PromptTokens& prompt, const Mat& context, std::span<const double> upstream) const {
        Mat grad(context.rows(), context.cols(), 0.0);
        require(upstream.size() == dim(), ErrorKind::shape, "encode_vjp: upstream length != dim");
        const EncodeTrace tr = forward(prompt, context);
        accumulate_vjp(prompt, tr, upstream, grad);
        return grad;
    }

    std::uint64_t weight_hash() const {
        Fnv1a h;
        h.str(to_string(config_.architecture)).u64(config_.seed);
        h.f64s(table_.weights().values()).f64s(positional_.values());
        h.f64s(w1_.values()).f64s(b1_).f64s(w2_.values()).f64s(b2_);
        return h.value();
    }

    json to_json() const {
        json j;
        j["architecture"] = to_string(config_.architecture);
        j["seed"] = config_.seed;
        j["dims"] = json{{"vocab", config_.vocab}, {"dim", config_.dim}, {"hidden", config_.hidden},
                         {"max_len", config_.max_len}};
        j["lowercase"] = config_.lowercase;
        j["weights"] = json{{"token_table", encode_f64_blob(table_.weights().values())},
                            {"positional", encode_f64_blob(positional_.values())},
                            {"w1", encode_f64_blob(w1_.values())},
                            {"b1", encode_f64_blob(b1_)},
                            {"w2", encode_f64_blob(w2_.values())},
                            {"b2", encode_f64_blob(b2_)}};
        return j;
    }

    static FrozenEncoder from_json(const json& j) {
        EncoderConfig c;
        c.architecture = architecture_from_string(j.at("architecture").get<std::string>());
        c.seed = j.at("seed").get<std::uint64_t>();
        const auto& dims = j.at("dims");
        c.vocab = dims.at("vocab").get<std::size_t>();
        c.dim = dims.at("dim").get<std::size_t>();
        c.hidden = dims.at("hidden").get<std::size_t>();
        c.max_len = dims.at("max_len").get<std::size_t>();
        c.lowercase = j.value("lowercase", true);
        const auto& w = j.at("weights");
        auto blob = [&](const char* key, std::size_t rows, std::size_t cols) {
            return Mat(rows, cols, decode_f64_blob(w.at(key).get<std::string>()));
        };
        const bool mlp = c.architecture == Architecture::pool_mlp_tanh;
        FrozenEncoder enc(c, TokenTable(blob("token_table", c.vocab, c.dim)));
        enc.positional_ = blob("positional", c.max_len, c.dim);
        enc.w1_ = blob("w1", mlp ? c.hidden : 0, mlp ? c.dim : 0);
        enc.w2_ = blob("w2", mlp ? c.dim : 0, mlp ? c.hidden : 0);
        enc.b1_ = decode_f64_blob(w.at("b1").get<std::string>());
        enc.b2_ = decode_f64_blob(w.at("b2").get<std::string>());
        require(enc.b1_.size() == (mlp ? c.hidden : 0) && enc.b2_.size() == (mlp ? c.dim : 0), ErrorKind::data,
                "encoder bias blob has wrong length");
        return enc;
    }

private:
    FrozenEncoder(const EncoderConfig& config, TokenTable table)
        : config_(config), tokenizer_(config.vocab, config.max_len, config.lowercase), table_(std::move(table)) {
        require(config.dim > 0, ErrorKind::config, "encoder dim must be positive");
    }

    static Mat gaussian(std::size_t rows, std::size_t cols, double sd, SeededRng rng) {
        Mat m(rows, cols);
        for (double& v : m.values()) v = rng.normal(0.0, sd);
        return m;
    }

    EncoderConfig config_;
    Tokenizer tokenizer_;
    TokenTable table_;
    Mat positional_;
    Mat w1_;
    Vec b1_;
    Mat w2_;
    Vec b2_;
};

}  // namespace sept
