#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace fdrl {

// Single deterministic stream. Every consumer takes the generator by
// reference so the order of draws is the order of calls.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
    std::uint64_t next() { return engine_(); }

    // Child stream whose seed is drawn from this one.
    Rng split() { return Rng(next()); }

    std::string serialize() const;
    void deserialize(const std::string& text);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace fdrl
