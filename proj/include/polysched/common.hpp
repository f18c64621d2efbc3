#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace polysched {

using JobId = int;

// Base error for everything the library reports to callers.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input document.
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally well-formed input that violates a model invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Scheduler or engine detected an inconsistent runtime state.
class SimulationError : public Error {
public:
    using Error::Error;
};

// A runtime-checked lemma/invariant failed during a simulation.
class InvariantViolation : public Error {
public:
    using Error::Error;
};

// Deterministic RNG for generators. mt19937_64 is fully specified by the
// standard; the uniform mappings below avoid std::uniform_*_distribution,
// whose output is implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // log-uniform on [lo, hi], lo > 0
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    // integer in [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(uniform() * static_cast<double>(hi - lo + 1));
    }

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(0, static_cast<int>(i) - 1));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

inline bool nearly_equal(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// FNV-1a, used for config hashes recorded in reports.
inline std::string fnv1a_hex(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace polysched
