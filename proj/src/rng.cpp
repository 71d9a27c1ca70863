#include "csdlma/rng.hpp"
#include "csdlma/types.hpp"

#include <limits>

namespace csdlma {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  // FNV-1a over the label, mixed with the master seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master) ^ h);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

std::string_view to_string(Action a) {
  return a == Action::kTransmit ? "TRANSMIT" : "SENSE";
}

std::string_view to_string(Observation o) {
  switch (o) {
    case Observation::kSuccessful: return "SUCCESSFUL";
    case Observation::kCollided: return "COLLIDED";
    case Observation::kBusy: return "BUSY";
    case Observation::kIdle: return "IDLE";
  }
  return "?";
}

std::string_view to_string(ChannelSymbol s) {
  switch (s) {
    case ChannelSymbol::kTransmitSuccessful: return "TS";
    case ChannelSymbol::kTransmitCollided: return "TC";
    case ChannelSymbol::kSenseBusy: return "SB";
    case ChannelSymbol::kSenseIdle: return "SI";
  }
  return "?";
}

}  // namespace csdlma
