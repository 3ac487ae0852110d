#pragma once

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <cstdint>
#include <random>
#include <vector>

namespace sphcov {

/// Seedable stream used everywhere randomness appears: mt19937-64 seeded from
/// (master seed, stream index) through std::seed_seq. Both pieces have fully
/// specified output, so streams are reproducible across platforms, and
/// replicates with different indices are independent streams that can run in
/// any order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t master_seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
    engine_.seed(seq);
  }

  /// A sub-stream, e.g. one replicate of an experiment.
  RandomStream split(std::uint64_t index) {
    const std::uint64_t s = engine_();
    return RandomStream(s, index);
  }

  double normal() { return normal_(engine_); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }

  std::size_t index(std::size_t n) {
    boost::random::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
  }

  std::vector<double> normals(std::size_t n) {
    std::vector<double> z(n);
    for (auto& v : z) v = normal();
    return z;
  }

  /// k distinct positions of [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
      boost::random::uniform_int_distribution<std::size_t> dist(i, n - 1);
      std::swap(pool[i], pool[dist(engine_)]);
    }
    pool.resize(k);
    return pool;
  }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  boost::random::uniform_01<double> uniform_;
};

}  // namespace sphcov
