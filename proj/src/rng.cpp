#include "fkan/rng.hpp"

#include <numeric>
#include <stdexcept>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

namespace fkan {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto p : parts) h = mix64(h ^ mix64(p));
  return h;
}

double Rng::uniform(double lo, double hi) {
  return boost::random::uniform_real_distribution<double>(lo, hi)(engine_);
}

double Rng::normal(double mean, double stddev) {
  return boost::random::normal_distribution<double>(mean, stddev)(engine_);
}

double Rng::gamma(double shape) {
  return boost::random::gamma_distribution<double>(shape, 1.0)(engine_);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: empty range");
  return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

std::vector<double> Rng::dirichlet(const std::vector<double>& alpha) {
  std::vector<double> draw(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!(alpha[i] > 0.0)) throw std::invalid_argument("Rng::dirichlet: concentration must be positive");
    draw[i] = gamma(alpha[i]);
    total += draw[i];
  }
  if (total <= 0.0) {
    // All gammas underflowed (tiny alpha): put the mass on one coordinate.
    std::fill(draw.begin(), draw.end(), 0.0);
    draw[index(draw.size())] = 1.0;
    return draw;
  }
  for (double& d : draw) d /= total;
  return draw;
}

}  // namespace fkan
