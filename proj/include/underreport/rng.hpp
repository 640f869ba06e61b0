#pragma once

#include <cstdint>
#include <random>

namespace underreport {

using Engine = std::mt19937_64;

/// Deterministically derives a child seed from a root seed and up to two
/// stream coordinates (e.g. chain index, draw index). Uses splitmix64 mixing,
/// so nearby coordinates give statistically unrelated streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t substream = 0);

/// Engine for the (seed, stream, substream) coordinate.
Engine make_engine(std::uint64_t seed, std::uint64_t stream,
                   std::uint64_t substream = 0);

double uniform01(Engine& rng);
double standard_normal(Engine& rng);
double normal(Engine& rng, double mean, double sd);
bool bernoulli(Engine& rng, double p);
std::int64_t binomial(Engine& rng, std::int64_t n, double p);

/// Poisson variate. Inversion for mean < 10, transformed rejection (PTRS,
/// Hoermann 1993) otherwise. mean == 0 returns 0.
std::int64_t poisson(Engine& rng, double mean);

}  // namespace underreport
