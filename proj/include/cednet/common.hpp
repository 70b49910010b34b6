#pragma once

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cednet {

using Shape = std::vector<std::int64_t>;

// Raised when tensor shapes or layer wiring do not line up.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised for invalid configurations (bad hyperparameters, malformed configs).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a numeric invariant is violated (non-finite values, failed checks).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised on checkpoint/tensor-container problems (corruption, version mismatch).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::int64_t numel_of(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::int64_t{1},
                           std::multiplies<std::int64_t>());
}

inline std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ')';
    return os.str();
}

// When enabled, every forward op checks its output for NaN/Inf and throws
// NumericError on violation. Tests and gradcheck turn this on.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

// Deterministic RNG used for weight init and data generation. mt19937_64
// drives it, but all distributions are hand-rolled so results do not depend
// on the standard library's distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64();
    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    // Inclusive integer range.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    // Standard normal via Box-Muller.
    double normal();
    // Normal(0, sigma) with rejection outside +-3 sigma.
    double truncated_normal(double sigma);

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Mixes a base seed with a stream index; used to derive per-scene seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace cednet
