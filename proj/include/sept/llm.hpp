// Optional chat-completion client that asks a language model for semantic
// neighbors, with an offline fixture mode, an on-disk response cache and a
// tolerant parser for dictionary-shaped replies. The transport is injected so
// the library itself never links a network stack.
#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sept/manifest.hpp"

namespace sept {

struct LlmClientConfig {
    std::string endpoint;                    // chat-completion URL, e.g. https://host/v1/chat/completions
    std::string model = "gpt-4o";
    std::string token_env = "SEPT_LLM_TOKEN";  // name of the env var holding the bearer token
    double timeout_seconds = 60.0;
    std::string fixture_path;                // offline source
    std::string cache_dir;                   // empty: no cache
    bool offline = true;
    std::size_t retries = 3;

    void validate() const {
        if (offline) {
            require(!fixture_path.empty(), ErrorKind::config, "offline neighbor generation requires a fixture path");
            return;
        }
        require(!endpoint.empty(), ErrorKind::config, "online neighbor generation requires an endpoint");
        require(!token_env.empty() && std::getenv(token_env.c_str()) != nullptr, ErrorKind::config,
                "online neighbor generation requires the token variable '" + token_env + "' to be set");
        require(timeout_seconds > 0.0, ErrorKind::config, "timeout must be positive");
        require(retries >= 1, ErrorKind::config, "retries must be >= 1");
    }
};

/// POSTs `body` to `url` with `headers` and returns the response body. Throws
/// Error(network) on connection failures, timeouts and non-2xx statuses.
using Transport = std::function<std::string(const std::string& url, const std::string& body,
                                            const std::map<std::string, std::string>& headers, double timeout_seconds)>;

// ---------------------------------------------------------------------------
// Payloads
// ---------------------------------------------------------------------------

/// User message requesting `per_class` related sound terms for every class.
inline std::string neighbor_request_text(const std::vector<std::string>& class_names, std::size_t per_class) {
    std::string list;
    for (std::size_t k = 0; k < class_names.size(); ++k) list += (k ? ", " : "") + class_names[k];
    const std::string n = std::to_string(per_class);
    return "Class names: " + list + "\n\n" +
           "Give " + n + " related terms for each class name above. Every term should name a sound, a sound source, "
           "or a way something sounds that a listener would associate with that class. Keep the term lists of "
           "different classes apart from each other, vary the terms inside each list, and never use one of the "
           "other class names as a term.\n\n"
           "Reply with only a Python dictionary that maps each class name to a list of exactly " + n +
           " strings, for example {'name': ['term 1', 'term 2']}.";
}

/// User message requesting `count` sound-description templates with a {class} slot.
inline std::string template_request_text(std::size_t count) {
    return "Write " + std::to_string(count) +
           " different short English phrases that describe an audio recording of some class. Each phrase must "
           "contain the placeholder {class} exactly once. Mix plain, technical and descriptive wording and vary "
           "the verbs used for how the sound is made or heard. Reply with a JSON array of strings only.";
}

inline json chat_request(const LlmClientConfig& config, const std::string& content) {
    return json{{"model", config.model}, {"messages", json::array({json{{"role", "user"}, {"content", content}}})}};
}

/// Text of the first choice of a chat-completion response.
inline std::string chat_response_text(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::parse, std::string("response is not JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
        fail(ErrorKind::parse, "response has no choices");
    const auto& c = j["choices"][0];
    if (c.contains("message") && c["message"].is_object() && c["message"].contains("content") &&
        c["message"]["content"].is_string())
        return c["message"]["content"].get<std::string>();
    if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
    fail(ErrorKind::parse, "first choice carries no text");
}

// ---------------------------------------------------------------------------
// Dictionary parsing
// ---------------------------------------------------------------------------

namespace detail {

/// Reader for {key: [item, ...], ...} with single- or double-quoted strings,
/// bare words, trailing commas and surrounding prose.
class DictReader {
public:
    explicit DictReader(std::string_view text) : s_(text) {}

    std::vector<std::pair<std::string, std::vector<std::string>>> read() {
        const auto open = s_.find('{');
        require(open != std::string_view::npos, ErrorKind::parse, "no '{' in response");
        pos_ = open + 1;
        std::vector<std::pair<std::string, std::vector<std::string>>> out;
        while (true) {
            skip_space_and_commas();
            require(pos_ < s_.size(), ErrorKind::parse, "unterminated dictionary");
            if (s_[pos_] == '}') break;
            std::string key = scalar(":");
            skip_space();
            expect(':');
            skip_space();
            expect('[');
            std::vector<std::string> items;
            while (true) {
                skip_space_and_commas();
                require(pos_ < s_.size(), ErrorKind::parse, "unterminated list for '" + key + "'");
                if (s_[pos_] == ']') {
                    ++pos_;
                    break;
                }
                items.push_back(scalar(",]"));
            }
            out.emplace_back(std::move(key), std::move(items));
        }
        return out;
    }

private:
    void skip_space() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    void skip_space_and_commas() {
        while (pos_ < s_.size() && (std::isspace(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == ',')) ++pos_;
    }
    void expect(char c) {
        require(pos_ < s_.size() && s_[pos_] == c, ErrorKind::parse,
                std::string("expected '") + c + "' at offset " + std::to_string(pos_));
        ++pos_;
    }
    std::string scalar(std::string_view stops) {
        require(pos_ < s_.size(), ErrorKind::parse, "unexpected end of response");
        const char q = s_[pos_];
        std::string out;
        if (q == '\'' || q == '"') {
            ++pos_;
            while (pos_ < s_.size() && s_[pos_] != q) {
                if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
                out += s_[pos_++];
            }
            expect(q);
            return out;
        }
        while (pos_ < s_.size() && stops.find(s_[pos_]) == std::string_view::npos && s_[pos_] != '\n') out += s_[pos_++];
        const auto b = out.find_first_not_of(" \t\r");
        require(b != std::string::npos, ErrorKind::parse, "empty entry at offset " + std::to_string(pos_));
        return out.substr(b, out.find_last_not_of(" \t\r") - b + 1);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Matches the parsed keys to `classes` (case/trim-insensitive) and keeps at most
/// `per_class` entries per class. Missing classes are a parse error.
inline NeighborSet parse_neighbor_response(std::string_view text, const ClassSet& classes, std::size_t per_class) {
    const auto entries = detail::DictReader(text).read();
    std::vector<std::vector<std::string>> lists;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto want = normalize_name(classes.name(i));
        const std::vector<std::string>* found = nullptr;
        for (const auto& [k, v] : entries)
            if (normalize_name(k) == want) found = &v;
        require(found != nullptr, ErrorKind::parse, "response lacks class '" + classes.name(i) + "'");
        require(!found->empty(), ErrorKind::parse, "response has an empty list for '" + classes.name(i) + "'");
        std::vector<std::string> l(found->begin(), found->begin() + static_cast<std::ptrdiff_t>(std::min(per_class, found->size())));
        lists.push_back(std::move(l));
    }
    return NeighborSet(std::move(lists), per_class);
}

/// Human-readable problems: lists shorter than `per_class` before padding,
/// duplicates inside a list, and entries equal to another class name.
inline std::vector<std::string> neighbor_violations(const NeighborSet& neighbors, const ClassSet& classes,
                                                    std::size_t per_class) {
    std::vector<std::string> out;
    if (neighbors.classes() != classes.size()) {
        out.push_back("neighbor set covers " + std::to_string(neighbors.classes()) + " of " +
                      std::to_string(classes.size()) + " classes");
        return out;
    }
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto& l = neighbors.lists()[i];
        std::set<std::string> seen;
        for (const auto& s : l) seen.insert(normalize_name(s));
        if (l.size() != per_class)
            out.push_back("'" + classes.name(i) + "' has " + std::to_string(l.size()) + " neighbors, expected " +
                          std::to_string(per_class));
        if (seen.size() != l.size())
            out.push_back("'" + classes.name(i) + "' has " + std::to_string(l.size() - seen.size()) + " repeated neighbors");
        for (std::size_t j = 0; j < classes.size(); ++j)
            if (j != i && seen.count(normalize_name(classes.name(j))))
                out.push_back("'" + classes.name(i) + "' lists the other class name '" + classes.name(j) + "'");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

inline std::uint64_t neighbor_cache_key(const ClassSet& classes, const std::string& model, std::size_t per_class) {
    return Fnv1a().u64(classes.hash()).str(model).u64(per_class).value();
}

/// Serialises cache-directory access across threads of one process.
inline std::mutex& cache_mutex() {
    static std::mutex m;
    return m;
}

/// Offline: the fixture file (a neighbor JSON object, or a raw model reply) is
/// read as-is. Online: a cached reply for (classes, model, N) is reused;
/// otherwise one request is sent, network failures are retried up to
/// config.retries times, and an unparseable reply is saved next to the cache
/// before a parse error is raised.
inline NeighborSet generate_neighbors(const ClassSet& classes, const LlmClientConfig& config, std::size_t per_class,
                                      const Transport& transport = nullptr) {
    config.validate();
    require(per_class >= 1, ErrorKind::config, "need at least one neighbor per class");
    if (config.offline) {
        std::ifstream in(config.fixture_path);
        require(in.good(), ErrorKind::data, "cannot open neighbor fixture '" + config.fixture_path + "'");
        const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const json j = json::parse(text, nullptr, false);
        if (!j.is_discarded() && j.is_object()) return NeighborSet::from_json(j, classes);
        return parse_neighbor_response(text, classes, per_class);
    }

    const std::string key = hex64(neighbor_cache_key(classes, config.model, per_class));
    const std::filesystem::path dir = config.cache_dir;
    const auto cached = dir / ("neighbors-" + key + ".txt");
    if (!config.cache_dir.empty()) {
        std::lock_guard<std::mutex> lock(cache_mutex());
        if (std::filesystem::exists(cached)) {
            std::ifstream in(cached);
            const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            return parse_neighbor_response(text, classes, per_class);
        }
    }

    require(static_cast<bool>(transport), ErrorKind::config, "online neighbor generation needs a transport");
    const std::string body = chat_request(config, neighbor_request_text(classes.names(), per_class)).dump();
    const std::map<std::string, std::string> headers{
        {"Authorization", std::string("Bearer ") + std::getenv(config.token_env.c_str())},
        {"Content-Type", "application/json"}};
    std::string response;
    for (std::size_t attempt = 1;; ++attempt) {
        try {
            response = transport(config.endpoint, body, headers, config.timeout_seconds);
            break;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::network) throw;
            if (attempt >= config.retries)
                fail(ErrorKind::network, "neighbor request failed after " + std::to_string(attempt) + " attempts: " + e.what());
            log_warning("neighbor request attempt " + std::to_string(attempt) + " failed: " + e.what());
        }
    }

    std::string text;
    try {
        text = chat_response_text(response);
        NeighborSet result = parse_neighbor_response(text, classes, per_class);
        if (!config.cache_dir.empty()) {
            std::lock_guard<std::mutex> lock(cache_mutex());
            write_text_file(cached, text);
        }
        return result;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::parse) throw;
        const auto raw = (config.cache_dir.empty() ? std::filesystem::path(".") : dir) / ("raw-" + key + ".txt");
        write_text_file(raw, response);
        fail(ErrorKind::parse, std::string(e.what()) + " (raw reply saved to " + raw.string() + ")");
    }
}

}  // namespace sept
