// Dataset manifests: class list with BASE/NEW tags, folds, and precomputed
// audio embeddings. JSON on disk with an optional little-endian f64 sidecar.
#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sept/prompting.hpp"

namespace sept {

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    bool operator==(const Fold&) const = default;
};

struct Sample {
    Vec embedding;
    std::size_t label = 0;
    bool operator==(const Sample&) const = default;
};

struct DatasetManifest {
    std::string name;
    std::size_t dim = 0;
    ClassSet classes;
    std::vector<Fold> folds;
    std::vector<Sample> samples;
    std::optional<EncoderConfig> encoder;  // text encoder the embeddings are paired with

    EncoderConfig encoder_config() const {
        EncoderConfig c = encoder.value_or(EncoderConfig{});
        if (!encoder) c.dim = dim;
        return c;
    }

    FrozenEncoder make_encoder() const { return FrozenEncoder::create(encoder_config()); }

    const Fold& fold(std::size_t f) const {
        require(f < folds.size(), ErrorKind::config, "fold " + std::to_string(f) + " does not exist");
        return folds[f];
    }

    EmbeddingBatch batch(const std::vector<std::size_t>& indices) const {
        EmbeddingBatch b;
        b.rows.reserve(indices.size());
        for (std::size_t k : indices) {
            require(k < samples.size(), ErrorKind::data, "sample index out of range");
            b.rows.push_back({samples[k].embedding, samples[k].label, classes.split(samples[k].label)});
        }
        return b;
    }

    /// Indices from `pool` whose label has split `s`.
    std::vector<std::size_t> filter_split(const std::vector<std::size_t>& pool, Split s) const {
        std::vector<std::size_t> out;
        for (std::size_t k : pool)
            if (classes.split(samples.at(k).label) == s) out.push_back(k);
        return out;
    }

    bool operator==(const DatasetManifest&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

/// Collects schema violations as "json-pointer: message" lines.
class SchemaErrors {
public:
    void add(const std::string& pointer, const std::string& msg) { errors_.push_back(pointer + ": " + msg); }
    bool empty() const { return errors_.empty(); }
    void throw_if_any(const std::string& what) const {
        if (errors_.empty()) return;
        std::ostringstream os;
        os << what << " failed validation (" << errors_.size() << " problem" << (errors_.size() == 1 ? "" : "s") << ")";
        for (const auto& e : errors_) os << "\n  " << e;
        fail(ErrorKind::data, os.str());
    }

private:
    std::vector<std::string> errors_;
};

}  // namespace detail

/// Parses and validates a manifest document. All schema violations are reported
/// together, each prefixed with its JSON pointer.
inline DatasetManifest manifest_from_json(const json& j, const std::optional<std::vector<Vec>>& sidecar = std::nullopt) {
    detail::SchemaErrors errs;
    DatasetManifest m;
    if (!j.is_object()) {
        errs.add("", "manifest must be a JSON object");
        errs.throw_if_any("manifest");
    }
    if (j.contains("name") && j["name"].is_string()) m.name = j["name"].get<std::string>();
    else errs.add("/name", "required string");

    if (j.contains("dim") && j["dim"].is_number_unsigned() && j["dim"].get<std::size_t>() > 0) m.dim = j["dim"].get<std::size_t>();
    else errs.add("/dim", "required positive integer");

    std::vector<std::string> names;
    std::vector<Split> splits;
    if (!j.contains("classes") || !j["classes"].is_array() || j["classes"].empty()) {
        errs.add("/classes", "required non-empty array");
    } else {
        std::set<std::string> seen;
        for (std::size_t k = 0; k < j["classes"].size(); ++k) {
            const auto& c = j["classes"][k];
            const std::string ptr = "/classes/" + std::to_string(k);
            if (!c.is_object() || !c.contains("name") || !c["name"].is_string()) {
                errs.add(ptr + "/name", "required string");
                continue;
            }
            const auto name = c["name"].get<std::string>();
            if (normalize_name(name).empty()) errs.add(ptr + "/name", "empty class name");
            else if (!seen.insert(normalize_name(name)).second) errs.add(ptr + "/name", "duplicate class name '" + name + "'");
            Split split = Split::base;
            if (!c.contains("split") || !c["split"].is_string() ||
                (c["split"] != "base" && c["split"] != "new"))
                errs.add(ptr + "/split", "must be \"base\" or \"new\"");
            else
                split = split_from_string(c["split"].get<std::string>());
            names.push_back(name);
            splits.push_back(split);
        }
    }

    if (j.contains("encoder")) {
        try {
            m.encoder = encoder_config_from_json(j["encoder"]);
            if (m.dim && m.encoder->dim != m.dim) errs.add("/encoder/dim", "differs from /dim");
        } catch (const std::exception& e) {
            errs.add("/encoder", e.what());
        }
    }

    const std::size_t K = names.size();
    if (!j.contains("samples") || !j["samples"].is_array()) {
        errs.add("/samples", "required array");
    } else {
        const auto& arr = j["samples"];
        if (sidecar && sidecar->size() != arr.size())
            errs.add("/samples", "sidecar holds " + std::to_string(sidecar->size()) + " embeddings for " +
                                     std::to_string(arr.size()) + " samples");
        for (std::size_t k = 0; k < arr.size(); ++k) {
            const auto& s = arr[k];
            const std::string ptr = "/samples/" + std::to_string(k);
            Sample smp;
            if (!s.is_object() || !s.contains("label") || !s["label"].is_number_unsigned()) {
                errs.add(ptr + "/label", "required non-negative integer");
            } else {
                smp.label = s["label"].get<std::size_t>();
                if (smp.label >= K) errs.add(ptr + "/label", "label " + std::to_string(smp.label) + " >= K");
            }
            if (sidecar) {
                if (k < sidecar->size()) smp.embedding = (*sidecar)[k];
            } else if (!s.is_object() || !s.contains("embedding") || !s["embedding"].is_array()) {
                errs.add(ptr + "/embedding", "required array of numbers");
            } else {
                for (std::size_t r = 0; r < s["embedding"].size(); ++r) {
                    const auto& v = s["embedding"][r];
                    if (!v.is_number()) {
                        errs.add(ptr + "/embedding/" + std::to_string(r), "not a number");
                        break;
                    }
                    smp.embedding.push_back(v.get<double>());
                }
            }
            if (m.dim && !smp.embedding.empty() && smp.embedding.size() != m.dim)
                errs.add(ptr + "/embedding", "length " + std::to_string(smp.embedding.size()) + " != dim");
            if (!all_finite(smp.embedding)) errs.add(ptr + "/embedding", "non-finite value");
            else if (!smp.embedding.empty() && norm2(smp.embedding) == 0.0) errs.add(ptr + "/embedding", "zero vector");
            m.samples.push_back(std::move(smp));
        }
    }

    if (!j.contains("folds") || !j["folds"].is_array() || j["folds"].empty()) {
        errs.add("/folds", "required non-empty array");
    } else {
        for (std::size_t f = 0; f < j["folds"].size(); ++f) {
            const auto& fj = j["folds"][f];
            const std::string ptr = "/folds/" + std::to_string(f);
            Fold fold;
            for (const char* part : {"train", "test"}) {
                if (!fj.is_object() || !fj.contains(part) || !fj[part].is_array()) {
                    errs.add(ptr + "/" + part, "required array of sample indices");
                    continue;
                }
                auto& dst = std::string(part) == "train" ? fold.train : fold.test;
                for (std::size_t k = 0; k < fj[part].size(); ++k) {
                    const auto& v = fj[part][k];
                    if (!v.is_number_unsigned() || v.get<std::size_t>() >= m.samples.size()) {
                        errs.add(ptr + "/" + part + "/" + std::to_string(k), "not a valid sample index");
                        continue;
                    }
                    dst.push_back(v.get<std::size_t>());
                }
            }
            std::set<std::size_t> train(fold.train.begin(), fold.train.end());
            if (train.size() != fold.train.size()) errs.add(ptr + "/train", "duplicate indices");
            for (std::size_t k = 0; k < fold.test.size(); ++k)
                if (train.count(fold.test[k])) {
                    errs.add(ptr + "/test/" + std::to_string(k), "index also in train");
                    break;
                }
            m.folds.push_back(std::move(fold));
        }
    }
    errs.throw_if_any("manifest");
    m.classes = ClassSet(std::move(names), std::move(splits));
    return m;
}

inline json manifest_to_json(const DatasetManifest& m, bool embeddings_inline = true) {
    json j;
    j["name"] = m.name;
    j["dim"] = m.dim;
    if (m.encoder) j["encoder"] = to_json(*m.encoder);
    json classes = json::array();
    for (std::size_t k = 0; k < m.classes.size(); ++k)
        classes.push_back(json{{"name", m.classes.name(k)}, {"split", to_string(m.classes.split(k))}});
    j["classes"] = classes;
    json folds = json::array();
    for (const auto& f : m.folds) folds.push_back(json{{"train", f.train}, {"test", f.test}});
    j["folds"] = folds;
    json samples = json::array();
    for (const auto& s : m.samples) {
        json sj{{"label", s.label}};
        if (embeddings_inline) sj["embedding"] = s.embedding;
        samples.push_back(sj);
    }
    j["samples"] = samples;
    return j;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::data, "cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::data, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::data, "cannot write '" + path.string() + "'");
    out << text;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

/// Sidecar layout: u64 count, u64 dim, then count*dim f64, all little-endian.
inline void write_embedding_sidecar(const std::filesystem::path& path, const std::vector<Sample>& samples,
                                    std::size_t dim) {
    std::string bytes;
    auto put_u64 = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) bytes += static_cast<char>((v >> (8 * b)) & 0xff);
    };
    put_u64(samples.size());
    put_u64(dim);
    for (const auto& s : samples) {
        require(s.embedding.size() == dim, ErrorKind::shape, "sidecar: embedding length != dim");
        for (double v : s.embedding) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            put_u64(bits);
        }
    }
    write_text_file(path, bytes);
}

inline std::vector<Vec> read_embedding_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::data, "cannot open sidecar '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    auto get_u64 = [&]() {
        require(pos + 8 <= bytes.size(), ErrorKind::data, "sidecar '" + path.string() + "' is truncated");
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos++])) << (8 * b);
        return v;
    };
    const auto count = get_u64();
    const auto dim = get_u64();
    const std::uint64_t payload = bytes.size() - pos;
    require(dim > 0 && count <= payload / 8 / dim && count * dim * 8 == payload, ErrorKind::data,
            "sidecar '" + path.string() + "' header (" + std::to_string(count) + " x " + std::to_string(dim) +
                ") does not match its " + std::to_string(payload) + " payload bytes");
    std::vector<Vec> out(count, Vec(dim));
    for (auto& row : out)
        for (double& v : row) {
            const std::uint64_t bits = get_u64();
            std::memcpy(&v, &bits, 8);
        }
    require(pos == bytes.size(), ErrorKind::data, "sidecar '" + path.string() + "' has trailing bytes");
    return out;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    std::optional<std::vector<Vec>> sidecar;
    if (j.is_object() && j.contains("embeddings_sidecar")) {
        require(j["embeddings_sidecar"].is_string(), ErrorKind::data, "/embeddings_sidecar: must be a file name");
        sidecar = read_embedding_sidecar(path.parent_path() / j["embeddings_sidecar"].get<std::string>());
    }
    return manifest_from_json(j, sidecar);
}

/// Writes the manifest; with `sidecar` the embeddings go to "<stem>.f64" next to it.
inline void save_manifest(const std::filesystem::path& path, const DatasetManifest& m, bool sidecar = false) {
    json j = manifest_to_json(m, !sidecar);
    if (sidecar) {
        const auto side = path.stem().string() + ".f64";
        write_embedding_sidecar(path.parent_path() / side, m.samples, m.dim);
        j["embeddings_sidecar"] = side;
    }
    write_json_file(path, j);
}

}  // namespace sept
