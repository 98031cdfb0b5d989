#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mmdeq/types.hpp"

namespace mmdeq {

// Deterministic random stream keyed by (seed, stream id). Each worker owns
// its own stream; streams are never shared across threads.
class RngStream {
public:
    explicit RngStream(RngSeed seed);

    double uniform();                       // U(0,1)
    double normal();                        // N(0,1)
    double gamma(double shape);             // Gamma(shape, 1)
    double beta(double alpha, double beta); // Beta(alpha, beta)
    int bernoulli(double p);
    std::uint64_t next_u64();

    // Fisher-Yates shuffle of 0..n-1.
    std::vector<int> permutation(int n);

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// `count` independent standard normal draws, deterministic given the seed.
std::vector<double> standard_normal_stream(RngSeed seed, std::int64_t count);

}  // namespace mmdeq
