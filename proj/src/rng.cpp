#include "mmdeq/rng.hpp"

#include <algorithm>

namespace mmdeq {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 make_engine(RngSeed s) {
    // Expand (seed, stream) into distinct engine state; stream enters the
    // mix so streams with equal seeds stay decorrelated.
    std::seed_seq seq{
        static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
        static_cast<std::uint32_t>(mix64(s.stream)),
        static_cast<std::uint32_t>(mix64(s.stream) >> 32),
        static_cast<std::uint32_t>(mix64(s.seed ^ ~s.stream)),
        static_cast<std::uint32_t>(mix64(s.seed ^ ~s.stream) >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(RngSeed seed) : gen_(make_engine(seed)) {}

double RngStream::uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
}

double RngStream::normal() { return normal_(gen_); }

double RngStream::gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(gen_);
}

double RngStream::beta(double alpha, double beta) {
    double g1 = gamma(alpha);
    double g2 = gamma(beta);
    double sum = g1 + g2;
    if (sum <= 0.0) return 0.5;   // only reachable for vanishing shapes
    return g1 / sum;
}

int RngStream::bernoulli(double p) { return uniform() < p ? 1 : 0; }

std::uint64_t RngStream::next_u64() { return gen_(); }

std::vector<int> RngStream::permutation(int n) {
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        auto j = static_cast<int>(next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    return idx;
}

std::vector<double> standard_normal_stream(RngSeed seed, std::int64_t count) {
    RngStream rng(seed);
    std::vector<double> out;
    out.reserve(static_cast<size_t>(std::max<std::int64_t>(count, 0)));
    for (std::int64_t i = 0; i < count; ++i) out.push_back(rng.normal());
    return out;
}

}  // namespace mmdeq
