#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include <boost/random/mersenne_twister.hpp>

namespace fkan {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Stable seed for a tuple of integers, e.g. derive_seed({seed, round, client}).
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

/// Seeded random source. Distributions come from Boost.Random, whose
/// algorithms are fixed in the headers, so streams are identical on every
/// platform (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0);
  double normal(double mean = 0.0, double stddev = 1.0);
  double gamma(double shape);
  /// Integer in [0, n).
  std::size_t index(std::size_t n);
  /// Sample from a symmetric-or-not Dirichlet with the given concentrations.
  std::vector<double> dirichlet(const std::vector<double>& alpha);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates with our own index draw keeps the permutation portable.
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

  boost::random::mt19937_64& engine() { return engine_; }

 private:
  boost::random::mt19937_64 engine_;
};

}  // namespace fkan
