#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace percsim {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream seed for replica k of a run. Streams for distinct k are decorrelated
// without any shared state between workers.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t k) {
  std::uint64_t s = master;
  std::uint64_t a = splitmix64(s);
  s ^= k * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
  std::uint64_t b = splitmix64(s);
  return a ^ (b + 0x9e3779b97f4a7c15ULL * (k + 1));
}

// mt19937_64 is fully specified by the standard; every draw below is built
// from raw engine output only, so identical seeds give identical streams on
// any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0, 1)
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // uniform on {0, ..., n-1}, rejection-free enough for our n
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n == 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Exact Poisson sample by the multiplicative method; means are split into
  // chunks so the product never underflows.
  std::uint64_t poisson(double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson: mean < 0");
    std::uint64_t total = 0;
    constexpr double kChunk = 500.0;
    while (mean > kChunk) {
      total += poisson_knuth(kChunk);
      mean -= kChunk;
    }
    return total + poisson_knuth(mean);
  }

 private:
  std::uint64_t poisson_knuth(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double p = 1.0;
    for (;;) {
      p *= uniform01();
      if (p <= limit) return k;
      ++k;
    }
  }

  std::mt19937_64 engine_;
};

// Walker/Vose alias table over nonnegative weights; sampling is two raw
// draws, construction is deterministic for a fixed weight order.
class AliasTable {
 public:
  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw std::invalid_argument("alias table: empty weights");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::invalid_argument("alias table: negative weight");
      total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("alias table: zero total weight");
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;
    std::vector<std::size_t> small, large;
    for (std::size_t i = n; i-- > 0;) {
      (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::size_t i : large) prob_[i] = 1.0;
    for (std::size_t i : small) prob_[i] = 1.0;
  }

  std::size_t sample(Rng& rng) const {
    const std::size_t i =
        static_cast<std::size_t>(rng.uniform_index(prob_.size()));
    return rng.uniform01() < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

}  // namespace percsim
