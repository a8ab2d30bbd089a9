// Synthetic datasets: class centers are hand-crafted template embeddings of the
// class names, audio samples are noisy copies of the centers, and neighbor
// lists are paraphrases of the class names.
#pragma once

#include <set>
#include <string>
#include <vector>

#include "sept/manifest.hpp"

namespace sept {

/// Class-name banks grouped by task, used for generated datasets and the
/// cross-dataset pairs.
namespace banks {

inline const std::vector<std::string>& sound_events() {
    static const std::vector<std::string> v{
        "dog bark",   "car horn",   "siren",      "rain",         "thunder",     "clock tick",
        "door knock", "footsteps",  "chainsaw",   "crickets",     "rooster",     "sea waves",
        "helicopter", "glass breaking", "vacuum cleaner", "church bells", "crackling fire", "frog",
        "keyboard typing", "water drops", "engine idling", "jackhammer", "gun shot", "street music",
        "hand saw",   "snoring",    "sneezing",   "toilet flush", "washing machine", "cow"};
    return v;
}

inline const std::vector<std::string>& emotions() {
    static const std::vector<std::string> v{"anger", "disgust", "fear",      "happy", "neutral", "sad",
                                            "calm",  "surprised", "fearful", "angry", "joyful",  "bored"};
    return v;
}

inline const std::vector<std::string>& instruments() {
    static const std::vector<std::string> v{"bass",  "brass", "flute",  "guitar",  "keyboard", "mallet",
                                            "organ", "reed",  "string", "vocal",   "bangu",    "daluo",
                                            "naobo", "xiaoluo", "violin", "trumpet"};
    return v;
}

/// Words combined with class names to form paraphrase neighbors.
inline const std::vector<std::string>& modifiers() {
    static const std::vector<std::string> v{
        "loud",    "distant", "faint",    "muffled",   "sharp",  "steady",  "echoing", "soft",
        "sudden",  "rhythmic", "harsh",   "gentle",    "close",  "recorded", "repeated", "low",
        "high",    "brief",   "constant", "reverberant", "dull", "crisp",   "noisy",   "quiet"};
    return v;
}

inline const std::vector<std::string>& suffixes() {
    static const std::vector<std::string> v{"sound", "noise", "audio", "clip", "recording", "tone", "signal", "sample"};
    return v;
}

/// Unrelated filler words mixed into noisy paraphrases.
inline const std::vector<std::string>& fillers() {
    static const std::vector<std::string> v{"outdoor", "indoor", "morning", "evening", "urban", "rural",
                                            "small",   "large",  "old",     "new",     "wooden", "metal",
                                            "far",     "near",   "heavy",   "light",   "slow",   "fast"};
    return v;
}

inline const std::vector<std::string>& by_task(std::string_view task) {
    if (task == "sound-event") return sound_events();
    if (task == "emotion") return emotions();
    if (task == "instrument") return instruments();
    fail(ErrorKind::config, "unknown class bank '" + std::string(task) + "'");
}

}  // namespace banks

struct SyntheticSpec {
    std::string name = "synthetic";
    std::size_t classes = 8;
    std::size_t samples_per_class = 48;
    std::size_t folds = 1;             // 1: first half of each class trains, second half tests
    std::size_t dim = 32;
    double sigma = 0.35;               // per-coordinate noise standard deviation
    std::uint64_t seed = 0;
    double neighbor_noise = 0.3;       // probability that a paraphrase gains a filler word
    std::size_t neighbors = 5;
    std::string task = "sound-event";  // class-name bank
    std::vector<std::string> names;    // explicit class names; overrides `classes` and `task`
    EncoderConfig encoder;

    void validate() const {
        require(effective_classes() >= 2, ErrorKind::config, "synthetic data needs K >= 2");
        require(sigma >= 0.0 && std::isfinite(sigma), ErrorKind::config, "sigma must be >= 0");
        require(samples_per_class >= 2, ErrorKind::config, "need at least two samples per class");
        require(folds >= 1 && (folds == 1 || folds <= samples_per_class), ErrorKind::config, "bad fold count");
        require(dim >= 1, ErrorKind::config, "dim must be positive");
        require(neighbor_noise >= 0.0 && neighbor_noise <= 1.0, ErrorKind::config, "neighbor noise must be in [0, 1]");
        require(neighbors >= 1, ErrorKind::config, "need at least one neighbor per class");
    }

    std::size_t effective_classes() const { return names.empty() ? classes : names.size(); }

    EncoderConfig encoder_config() const {
        EncoderConfig c = encoder;
        c.dim = dim;
        return c;
    }
};

inline json to_json(const SyntheticSpec& s) {
    return json{{"name", s.name},
                {"classes", s.effective_classes()},
                {"samples_per_class", s.samples_per_class},
                {"folds", s.folds},
                {"dim", s.dim},
                {"sigma", s.sigma},
                {"seed", s.seed},
                {"neighbor_noise", s.neighbor_noise},
                {"neighbors", s.neighbors},
                {"task", s.task},
                {"names", s.names},
                {"encoder", to_json(s.encoder_config())}};
}

/// Class names of a spec: the explicit list, or K names drawn from the task bank.
inline std::vector<std::string> synthetic_class_names(const SyntheticSpec& spec) {
    if (!spec.names.empty()) return spec.names;
    std::vector<std::string> bank = banks::by_task(spec.task);
    require(spec.classes <= bank.size(), ErrorKind::config,
            "bank '" + spec.task + "' holds only " + std::to_string(bank.size()) + " names");
    SeededRng(spec.seed).split(10).shuffle(bank);
    bank.resize(spec.classes);
    return bank;
}

/// Samples are normalize(center + N(0, sigma^2 I)) with the center the default
/// template embedding of the class name. Samples are stored class by class.
inline DatasetManifest generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    DatasetManifest m;
    m.name = spec.name;
    m.dim = spec.dim;
    m.encoder = spec.encoder_config();
    m.classes = ClassSet::half_split(synthetic_class_names(spec));
    const FrozenEncoder enc = FrozenEncoder::create(*m.encoder);
    const std::size_t K = m.classes.size();
    const std::size_t S = spec.samples_per_class;

    const SeededRng root(spec.seed);
    for (std::size_t c = 0; c < K; ++c) {
        const Vec center = template_embedding(enc, kDefaultTemplate, m.classes.name(c));
        SeededRng rng = root.split(100 + c);
        for (std::size_t s = 0; s < S; ++s) {
            Vec x = center;
            for (double& v : x) v += rng.normal(0.0, spec.sigma);
            if (norm2(x) == 0.0) x = center;
            m.samples.push_back({normalized(x), c});
        }
    }

    if (spec.folds == 1) {
        Fold f;
        for (std::size_t c = 0; c < K; ++c)
            for (std::size_t s = 0; s < S; ++s) (s < S / 2 ? f.train : f.test).push_back(c * S + s);
        m.folds.push_back(std::move(f));
    } else {
        for (std::size_t k = 0; k < spec.folds; ++k) {
            Fold f;
            for (std::size_t c = 0; c < K; ++c)
                for (std::size_t s = 0; s < S; ++s) (s % spec.folds == k ? f.test : f.train).push_back(c * S + s);
            m.folds.push_back(std::move(f));
        }
    }
    return m;
}

/// N paraphrases per class: a modifier before or a suffix after the class name,
/// plus, with probability neighbor_noise, an unrelated filler word. No paraphrase
/// equals any class name.
inline NeighborSet generate_synthetic_neighbors(const ClassSet& classes, std::size_t per_class, double noise,
                                                std::uint64_t seed) {
    require(per_class >= 1, ErrorKind::config, "need at least one neighbor per class");
    std::set<std::string> names;
    for (const auto& n : classes.names()) names.insert(normalize_name(n));
    const SeededRng root(seed);
    const auto& mods = banks::modifiers();
    const auto& sufs = banks::suffixes();
    const auto& fill = banks::fillers();
    std::vector<std::vector<std::string>> lists;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        SeededRng rng = root.split(200 + i);
        std::set<std::string> seen;
        std::vector<std::string> list;
        for (std::size_t attempt = 0; list.size() < per_class; ++attempt) {
            require(attempt < 1000 * per_class, ErrorKind::data, "cannot build distinct paraphrases");
            std::string p = rng.uniform() < 0.5 ? mods[rng.uniform_index(mods.size())] + " " + classes.name(i)
                                                : classes.name(i) + " " + sufs[rng.uniform_index(sufs.size())];
            if (rng.uniform() < noise) p = fill[rng.uniform_index(fill.size())] + " " + p;
            const auto key = normalize_name(p);
            if (names.count(key) || !seen.insert(key).second) continue;
            list.push_back(std::move(p));
        }
        lists.push_back(std::move(list));
    }
    return NeighborSet(std::move(lists));
}

inline NeighborSet generate_synthetic_neighbors(const DatasetManifest& m, const SyntheticSpec& spec) {
    return generate_synthetic_neighbors(m.classes, spec.neighbors, spec.neighbor_noise, spec.seed);
}

/// Source/target specs drawn from disjoint halves of one task bank, sharing the
/// text encoder so a learned context transfers between them.
inline std::pair<SyntheticSpec, SyntheticSpec> cross_dataset_specs(const std::string& task, std::size_t classes,
                                                                   std::uint64_t seed, double sigma = 0.35,
                                                                   std::size_t dim = 32) {
    std::vector<std::string> bank = banks::by_task(task);
    require(2 * classes <= bank.size(), ErrorKind::config,
            "bank '" + task + "' too small for two disjoint sets of " + std::to_string(classes) + " classes");
    SeededRng(seed).split(11).shuffle(bank);
    SyntheticSpec src, tgt;
    for (SyntheticSpec* s : {&src, &tgt}) {
        s->task = task;
        s->sigma = sigma;
        s->dim = dim;
        s->seed = seed;
    }
    src.name = task + "-source";
    tgt.name = task + "-target";
    tgt.seed = seed + 1;
    src.names.assign(bank.begin(), bank.begin() + static_cast<std::ptrdiff_t>(classes));
    tgt.names.assign(bank.begin() + static_cast<std::ptrdiff_t>(classes),
                     bank.begin() + static_cast<std::ptrdiff_t>(2 * classes));
    return {src, tgt};
}

}  // namespace sept
