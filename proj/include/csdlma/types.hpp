#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace csdlma {

using Slot = std::uint64_t;

enum class Action : std::uint8_t { kTransmit = 0, kSense = 1 };

inline constexpr int kNumActions = 2;

/// What a node learns about the basic slot it just lived through.
enum class Observation : std::uint8_t { kSuccessful, kCollided, kBusy, kIdle };

/// Action-observation pair. The numeric value is the one-hot position.
enum class ChannelSymbol : std::uint8_t {
  kTransmitSuccessful = 0,
  kTransmitCollided = 1,
  kSenseBusy = 2,
  kSenseIdle = 3,
};

inline constexpr int kNumSymbols = 4;

/// Raised when an internal computation goes wrong at run time (diverged
/// training, inconsistent feedback, non-finite values).
class Fault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view to_string(Action a);
std::string_view to_string(Observation o);
std::string_view to_string(ChannelSymbol s);

}  // namespace csdlma
