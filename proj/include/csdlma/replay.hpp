#pragma once

#include "csdlma/rng.hpp"
#include "csdlma/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace csdlma {

/// (c_t, a_t, r_{t+1}, c_{t+1}). Full states are rebuilt from runs of
/// consecutive entries.
struct AbbreviatedExperience {
  ChannelSymbol symbol = ChannelSymbol::kSenseIdle;
  Action action = Action::kSense;
  double reward = 0.0;
  ChannelSymbol next_symbol = ChannelSymbol::kSenseIdle;

  bool operator==(const AbbreviatedExperience&) const = default;
};

/// FIFO ring of abbreviated experiences. Index 0 is the oldest surviving
/// entry; every entry also has an absolute index (its position in the
/// stream of all stores).
class ExperienceBuffer {
 public:
  explicit ExperienceBuffer(std::size_t capacity = 500);

  std::size_t capacity() const { return slots_.size(); }
  std::size_t size() const { return size_; }
  std::uint64_t total_stored() const { return total_; }

  /// Absolute index of the entry at position i.
  std::uint64_t absolute_index(std::size_t i) const { return total_ - size_ + i; }

  const AbbreviatedExperience& at(std::size_t i) const;

  void store(const AbbreviatedExperience& exp);

  /// Reward backpropagation: if `latest_reward` = R > 1, the rewards of the
  /// last R stored entries become 1 (clipped at the oldest survivor).
  /// Rewards of 0 or 1 leave the buffer untouched.
  void backpropagate_reward(double latest_reward);

  /// CSV dump: index,c_t,a_t,r,c_next.
  void write_csv(std::ostream& out) const;

 private:
  AbbreviatedExperience& mutable_at(std::size_t i);

  std::vector<AbbreviatedExperience> slots_;
  std::size_t head_ = 0;  // position of the oldest entry
  std::size_t size_ = 0;
  std::uint64_t total_ = 0;
};

/// One reconstructed experience (s_i, a_i, r_{i+1..i+n}, s_{i+n}).
struct ReplaySample {
  std::vector<ChannelSymbol> state;
  Action action = Action::kSense;
  std::vector<double> rewards;
  std::vector<ChannelSymbol> next_state;
  /// Absolute index of the entry whose next_symbol ends next_state; two
  /// samples with the same key have identical next states.
  std::uint64_t next_state_key = 0;

  bool operator==(const ReplaySample&) const = default;
};

/// Number of consecutive entries a sample needs: M + n - 1.
std::size_t window_length(int history, int n);

/// Rebuilds the experience whose window starts at buffer position `start`.
/// n = 1 gives the one-step (and RB) form.
ReplaySample reconstruct_window(const ExperienceBuffer& buffer, std::size_t start, int history,
                                int n);

/// Uniform start over all windows lying fully inside the buffer. Empty if
/// the buffer holds fewer than M + n - 1 entries.
std::optional<ReplaySample> sample_window(const ExperienceBuffer& buffer, int history, int n,
                                          Rng& rng);

}  // namespace csdlma
