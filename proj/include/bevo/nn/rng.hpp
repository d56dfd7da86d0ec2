#pragma once

#include <cstdint>
#include <random>

namespace bevo::nn {

// Seeded random source. Every stochastic choice in the project draws from an
// explicitly seeded Rng so runs are reproducible bit-for-bit.
class Rng {
  public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(gen_);
    }
    int64_t uniform_int(int64_t lo, int64_t hi) {  // inclusive bounds
        return std::uniform_int_distribution<int64_t>(lo, hi)(gen_);
    }
    bool bernoulli(double p) { return std::bernoulli_distribution(p)(gen_); }

    uint64_t raw() { return gen_(); }

    std::mt19937_64& engine() { return gen_; }

  private:
    std::mt19937_64 gen_;
};

}  // namespace bevo::nn
