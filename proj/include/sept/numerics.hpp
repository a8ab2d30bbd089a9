// Dense vectors/matrices, stable primitives, error types and the seeded RNG
// shared by every other sept header.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace sept {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorKind {
    shape,     // length / dimension mismatch, index out of range
    domain,    // mathematically undefined input (zero norm, negative accuracy)
    input,     // malformed user strings (empty text, bad template)
    data,      // manifest / neighbor / margin file content problems
    protocol,  // evaluation protocol violations (label outside split, empty split)
    config,    // inconsistent configuration, hash mismatches
    numeric,   // non-finite values during optimisation
    usage,     // API misuse (i == j in inter loss, bad CLI flags)
    parse,     // unparseable external payloads
    network,   // transport failures
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::shape: return "shape error";
        case ErrorKind::domain: return "domain error";
        case ErrorKind::input: return "input error";
        case ErrorKind::data: return "data error";
        case ErrorKind::protocol: return "protocol error";
        case ErrorKind::config: return "config error";
        case ErrorKind::numeric: return "numeric error";
        case ErrorKind::usage: return "usage error";
        case ErrorKind::parse: return "parse error";
        case ErrorKind::network: return "network error";
    }
    return "error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Destination for non-fatal diagnostics (padding, truncation, small classes).
inline std::function<void(const std::string&)>& warning_sink() {
    static std::function<void(const std::string&)> sink = [](const std::string& msg) {
        std::fprintf(stderr, "warning: %s\n", msg.c_str());
    };
    return sink;
}

inline void log_warning(const std::string& msg) {
    if (warning_sink()) warning_sink()(msg);
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

// ---------------------------------------------------------------------------
// Vectors and matrices
// ---------------------------------------------------------------------------

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorKind::shape, "dot: length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require(x.size() == y.size(), ErrorKind::shape, "axpy: length mismatch");
    for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

inline Vec scaled(std::span<const double> a, double alpha) {
    Vec out(a.begin(), a.end());
    for (double& v : out) v *= alpha;
    return out;
}

inline Vec difference(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorKind::shape, "difference: length mismatch");
    Vec out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] - b[k];
    return out;
}

inline bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

inline Vec normalized(std::span<const double> a) {
    const double n = norm2(a);
    require(n > 0.0, ErrorKind::domain, "normalized: zero-norm vector");
    return scaled(a, 1.0 / n);
}

/// Row-major dense matrix.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
    Mat(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        require(values_.size() == rows_ * cols_, ErrorKind::shape, "Mat: values.size() != rows*cols");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    Mat& operator+=(const Mat& other) {
        require(rows_ == other.rows_ && cols_ == other.cols_, ErrorKind::shape, "Mat +=: shape mismatch");
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
        return *this;
    }

    Mat& operator*=(double alpha) {
        for (double& v : values_) v *= alpha;
        return *this;
    }

    bool operator==(const Mat&) const = default;

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    double frobenius() const { return norm2(values_); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// out = m * x
inline Vec matvec(const Mat& m, std::span<const double> x) {
    require(m.cols() == x.size(), ErrorKind::shape, "matvec: shape mismatch");
    Vec out(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), x);
    return out;
}

/// out = m^T * y
inline Vec matvec_transposed(const Mat& m, std::span<const double> y) {
    require(m.rows() == y.size(), ErrorKind::shape, "matvec_transposed: shape mismatch");
    Vec out(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) axpy(y[r], m.row(r), out);
    return out;
}

// ---------------------------------------------------------------------------
// Similarity and softmax
// ---------------------------------------------------------------------------

/// Cosine similarity clamped to [-1, 1].
inline double cosine_sim(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorKind::shape, "cosine_sim: length mismatch");
    const double na = norm2(a);
    const double nb = norm2(b);
    require(na > 0.0 && nb > 0.0, ErrorKind::domain, "cosine_sim: zero-norm input");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

inline double l2_dist(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorKind::shape, "l2_dist: length mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

inline Vec stable_softmax(std::span<const double> logits) {
    require(!logits.empty(), ErrorKind::shape, "stable_softmax: empty input");
    require(all_finite(logits), ErrorKind::numeric, "stable_softmax: non-finite logit");
    const double mx = *std::max_element(logits.begin(), logits.end());
    Vec out(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - mx);
        total += out[k];
    }
    for (double& v : out) v /= total;
    return out;
}

/// log(sum(exp(logits))) computed with max subtraction.
inline double log_sum_exp(std::span<const double> logits) {
    require(!logits.empty(), ErrorKind::shape, "log_sum_exp: empty input");
    require(all_finite(logits), ErrorKind::numeric, "log_sum_exp: non-finite logit");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double v : logits) total += std::exp(v - mx);
    return mx + std::log(total);
}

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
    require(!v.empty(), ErrorKind::shape, "argmax: empty input");
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[best]) best = k;
    return best;
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// Incremental FNV-1a (64 bit). Doubles are hashed by their little-endian bit pattern.
class Fnv1a {
public:
    Fnv1a& bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t k = 0; k < n; ++k) {
            state_ ^= p[k];
            state_ *= kFnvPrime;
        }
        return *this;
    }
    Fnv1a& str(std::string_view s) {
        bytes(s.data(), s.size());
        return u64(s.size());
    }
    Fnv1a& u64(std::uint64_t v) {
        unsigned char buf[8];
        for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>(v >> (8 * k));
        return bytes(buf, 8);
    }
    Fnv1a& f64(double v) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        std::memcpy(&bits, &v, sizeof bits);
        return u64(bits);
    }
    Fnv1a& f64s(std::span<const double> vs) {
        u64(vs.size());
        for (double v : vs) f64(v);
        return *this;
    }
    std::uint64_t value() const noexcept { return state_; }

private:
    std::uint64_t state_ = kFnvOffset;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k, v >>= 4) out[static_cast<std::size_t>(k)] = digits[v & 0xF];
    return out;
}

inline std::uint64_t parse_hex64(std::string_view s) {
    require(s.size() == 16, ErrorKind::parse, "expected 16 hex digits, got '" + std::string(s) + "'");
    std::uint64_t v = 0;
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
        else fail(ErrorKind::parse, "bad hex digit in '" + std::string(s) + "'");
    }
    return v;
}

// ---------------------------------------------------------------------------
// SeededRng
// ---------------------------------------------------------------------------

/// Counter-based SplitMix64 generator. Draw k is mix(seed + (k+1)*gamma), so the
/// sequence depends only on the seed. Normals use Box-Muller on 53-bit uniforms.
class SeededRng {
public:
    static constexpr std::string_view kAlgorithm = "splitmix64-counter/box-muller";

    explicit SeededRng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix(state_);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n) {
        require(n > 0, ErrorKind::domain, "uniform_index: n == 0");
        const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::size_t>(wide >> 64);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return mean + stddev * radius * std::cos(angle);
    }

    /// Independent stream derived from this generator's seed (not its position).
    SeededRng split(std::uint64_t stream) const { return SeededRng(mix(seed_ ^ mix(stream + kGamma))); }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t k = items.size(); k > 1; --k) std::swap(items[k - 1], items[uniform_index(k)]);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Parallelism
// ---------------------------------------------------------------------------

/// Worker count from SEPT_THREADS (1 forces single-threaded execution).
inline std::size_t thread_count() {
    if (const char* env = std::getenv("SEPT_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Runs fn(k) for k in [0, n). Callers write into slot k only and reduce afterwards
/// in index order, so results do not depend on the worker count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t k = w; k < n; k += workers) fn(k);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace sept
