// Shared fixtures for the test suites: random loss instances and paths to the
// committed fixture files.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sept/sept.hpp"

#ifndef SEPT_FIXTURE_DIR
#define SEPT_FIXTURE_DIR "fixtures"
#endif

namespace sept::test {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(SEPT_FIXTURE_DIR) / rel; }

/// Silences warnings for the lifetime of the guard.
class QuietWarnings {
public:
    QuietWarnings() : saved_(warning_sink()) { warning_sink() = nullptr; }
    ~QuietWarnings() { warning_sink() = saved_; }

private:
    std::function<void(const std::string&)> saved_;
};

inline const std::vector<std::string>& word_bank() {
    static const std::vector<std::string> v{
        "bark",  "horn",   "siren", "rain",   "thunder", "tick",   "knock", "steps", "saw",    "cricket",
        "crow",  "waves",  "rotor", "glass",  "vacuum",  "bell",   "fire",  "frog",  "typing", "drops",
        "idle",  "hammer", "shot",  "music",  "snore",   "sneeze", "flush", "cow",   "wind",   "hiss",
        "hum",   "click",  "buzz",  "roar",   "chirp",   "creak",  "rumble", "ring", "whistle", "splash"};
    return v;
}

/// A random loss instance: a small encoder, K classes (all BASE unless
/// `half_split`), N neighbors per class, a T-template pool, a batch of unit
/// audio embeddings and a random context.
struct Instance {
    EncoderConfig config;
    FrozenEncoder encoder;
    ClassSet classes;
    NeighborSet neighbors;
    TemplatePool pool;
    MarginTable margins;
    EmbeddingBatch batch;
    ContextMatrix ctx;
};

inline std::vector<std::string> random_words(SeededRng& rng, std::size_t count, std::size_t max_words) {
    std::vector<std::string> out;
    const auto& bank = word_bank();
    while (out.size() < count) {
        const std::size_t words = 1 + rng.uniform_index(max_words);
        std::string s;
        for (std::size_t w = 0; w < words; ++w) s += (w ? " " : "") + bank[rng.uniform_index(bank.size())];
        if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    return out;
}

inline Instance random_instance(std::uint64_t seed, std::size_t K = 4, std::size_t N = 3, std::size_t M = 2,
                                std::size_t d = 8, std::size_t T = 3, bool half_split = false,
                                std::size_t batch_rows = 8, double context_sd = 0.3) {
    SeededRng rng(seed);
    EncoderConfig cfg;
    cfg.seed = seed;
    cfg.vocab = 512;
    cfg.dim = d;
    cfg.hidden = 12;
    cfg.max_len = 16;
    Instance in{cfg, FrozenEncoder::create(cfg), {}, {}, {}, {}, {}, ContextMatrix::zeros(M, d)};
    auto names = random_words(rng, K, 2);
    in.classes = half_split ? ClassSet::half_split(names) : ClassSet::all_base(names);
    std::vector<std::vector<std::string>> lists;
    for (std::size_t i = 0; i < K; ++i) lists.push_back(random_words(rng, N, 3));
    in.neighbors = NeighborSet(std::move(lists));
    std::vector<std::string> templates;
    const std::vector<std::string> frames{"{class}", "a sound of {class}", "the {class} heard", "recording of {class} here",
                                          "{class} nearby", "this is {class}"};
    for (std::size_t t = 0; t < T; ++t) templates.push_back(frames[t % frames.size()] + (t >= frames.size() ? " again" : ""));
    in.pool = TemplatePool(templates);
    in.margins = compute_margin_table(in.encoder, in.classes, in.neighbors, in.pool);
    const auto labels = in.classes.base_indices();
    for (std::size_t r = 0; r < batch_rows; ++r) {
        Vec x(d);
        for (double& v : x) v = rng.normal();
        const std::size_t label = labels[r % labels.size()];
        in.batch.rows.push_back({normalized(x), label, in.classes.split(label)});
    }
    in.ctx = ContextMatrix::random(M, d, rng.split(7), context_sd);
    return in;
}

inline ExpansionInputs expansion_inputs(const Instance& in, AblationFlags flags = AblationFlags::full()) {
    return ExpansionInputs{in.encoder, in.classes, in.neighbors, in.margins, flags};
}

/// Zero-loss fixture: identity encoder whose K single-word class names are
/// injected as orthonormal rows, every neighbor list holds the class name
/// itself, the template is the bare name and the context is zero with M = 3, so
/// the learned embeddings equal the template embeddings bit for bit. Every
/// intra distance equals its margin 0 and every inter distance its margin.
inline Instance fixed_point_instance(std::size_t K = 4, std::size_t N = 2, std::size_t d = 8) {
    EncoderConfig cfg;
    cfg.architecture = Architecture::pool_identity;
    cfg.seed = 3;
    cfg.vocab = 4096;
    cfg.dim = d;
    cfg.max_len = 8;
    const std::vector<std::string> words{"alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel"};
    std::vector<std::pair<std::string, Vec>> rows;
    std::vector<std::string> names(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(K));
    for (std::size_t i = 0; i < K; ++i) {
        Vec e(d, 0.0);
        e[i] = 1.0;
        rows.emplace_back(names[i], e);
    }
    Instance in{cfg, FrozenEncoder::with_injected_rows(cfg, rows), ClassSet::all_base(names), {},
                TemplatePool(std::vector<std::string>{"{class}"}), {}, {}, ContextMatrix::zeros(3, d)};
    std::vector<std::vector<std::string>> lists;
    for (const auto& n : names) lists.push_back(std::vector<std::string>(N, n));
    in.neighbors = NeighborSet(std::move(lists));
    in.margins = compute_margin_table(in.encoder, in.classes, in.neighbors, in.pool);
    return in;
}

/// Central finite-difference gradient of f at ctx.
template <typename F>
Mat finite_difference(const ContextMatrix& ctx, F&& f, double eps = 1e-5) {
    Mat g(ctx.length(), ctx.dim(), 0.0);
    for (std::size_t r = 0; r < ctx.length(); ++r)
        for (std::size_t c = 0; c < ctx.dim(); ++c) {
            Mat plus = ctx.values(), minus = ctx.values();
            plus(r, c) += eps;
            minus(r, c) -= eps;
            g(r, c) = (f(ContextMatrix(plus)) - f(ContextMatrix(minus))) / (2.0 * eps);
        }
    return g;
}

/// ||a - b|| / max(||b||, 1e-12)
inline double relative_error(const Mat& a, const Mat& b) {
    double num = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a.values()[k] - b.values()[k];
        num += diff * diff;
    }
    return std::sqrt(num) / std::max(b.frobenius(), 1e-12);
}

inline Objective objective_for(const Instance& in, double lambda = 3.0, double mu = 0.0,
                               AblationFlags flags = AblationFlags::full(), double tau = 0.01,
                               const std::vector<Vec>* anchors = nullptr) {
    return Objective{in.encoder,
                     in.classes,
                     &in.neighbors,
                     &in.margins,
                     flags,
                     in.classes.base_indices(),
                     anchors ? *anchors : std::vector<Vec>{},
                     ObjectiveWeights{lambda, mu, tau, Reduction::mean}};
}

}  // namespace sept::test
