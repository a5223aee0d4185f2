#pragma once

// Shared small utilities: deterministic RNG, bounded parallel loops,
// error types, number formatting for reports.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qm {

using Cx = std::complex<double>;

// Usage errors (bad arguments, mismatched spaces, malformed scenarios).
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Axiom / validation failures (non-PSD density matrix, Gram below slack, ...).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical non-convergence (extrapolation residual above tolerance, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// xoshiro-free deterministic RNG: mt19937_64 bit stream with explicit
// uniform/normal transforms so fixtures reproduce across standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; cache the second deviate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 1e-300);
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Cx normal_complex() { return {normal(), normal()}; }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Parallelism cap: QMEASURE_THREADS env var, default 1 (fully deterministic).
inline unsigned max_threads() {
    static const unsigned cached = [] {
        if (const char* env = std::getenv("QMEASURE_THREADS")) {
            long v = std::strtol(env, nullptr, 10);
            if (v >= 1) return static_cast<unsigned>(v);
        }
        return 1u;
    }();
    return cached;
}

// Chunked parallel loop over [0, n). Each index writes only its own slots,
// so results do not depend on the thread count.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    unsigned t = max_threads();
    if (t <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    t = std::min<std::size_t>(t, n);
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned w = 0; w < t; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += t) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Fixed-width scientific formatting; reports must be byte-stable.
inline std::string fmt_sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", v);
    return buf;
}

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string fmt_complex(Cx z) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.12e,%.12e", z.real(), z.imag());
    return buf;
}

// FNV-1a 64-bit, used as the scenario digest.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace qm
