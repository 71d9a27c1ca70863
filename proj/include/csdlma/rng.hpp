#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace csdlma {

/// Derives an independent seed from a master seed and a stable label.
/// The mapping depends only on (master, label), so streams of unrelated
/// labels never shift when other labels are added.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

/// Private random stream. All draws are defined here so that traces are
/// reproducible independently of the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  Rng(std::uint64_t master, std::string_view label)
      : engine_(derive_seed(master, label)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace csdlma
