#include "csdlma/replay.hpp"

#include <cmath>
#include <ostream>

namespace csdlma {

ExperienceBuffer::ExperienceBuffer(std::size_t capacity) : slots_(capacity) {
  if (capacity == 0) throw std::invalid_argument("experience buffer capacity must be > 0");
}

const AbbreviatedExperience& ExperienceBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("experience buffer index out of range");
  return slots_[(head_ + i) % slots_.size()];
}

AbbreviatedExperience& ExperienceBuffer::mutable_at(std::size_t i) {
  return slots_[(head_ + i) % slots_.size()];
}

void ExperienceBuffer::store(const AbbreviatedExperience& exp) {
  if (size_ < slots_.size()) {
    slots_[(head_ + size_) % slots_.size()] = exp;
    ++size_;
  } else {
    slots_[head_] = exp;
    head_ = (head_ + 1) % slots_.size();
  }
  ++total_;
}

void ExperienceBuffer::backpropagate_reward(double latest_reward) {
  if (!(latest_reward > 1.0)) return;
  const auto r = static_cast<std::size_t>(std::llround(latest_reward));
  const std::size_t count = std::min(r, size_);
  for (std::size_t k = 0; k < count; ++k) mutable_at(size_ - 1 - k).reward = 1.0;
}

void ExperienceBuffer::write_csv(std::ostream& out) const {
  out << "index,c_t,a_t,r,c_next\n";
  for (std::size_t i = 0; i < size_; ++i) {
    const auto& e = at(i);
    out << absolute_index(i) << ',' << to_string(e.symbol) << ',' << to_string(e.action) << ','
        << e.reward << ',' << to_string(e.next_symbol) << '\n';
  }
}

std::size_t window_length(int history, int n) {
  if (history < 1 || n < 1) throw std::invalid_argument("window needs history >= 1 and n >= 1");
  return static_cast<std::size_t>(history + n - 1);
}

ReplaySample reconstruct_window(const ExperienceBuffer& buffer, std::size_t start, int history,
                                int n) {
  const std::size_t len = window_length(history, n);
  if (start + len > buffer.size()) throw std::out_of_range("replay window exceeds buffer");
  const auto m = static_cast<std::size_t>(history);
  const auto steps = static_cast<std::size_t>(n);

  ReplaySample s;
  s.state.reserve(m);
  for (std::size_t k = 0; k < m; ++k) s.state.push_back(buffer.at(start + k).symbol);
  const std::size_t decision = start + m - 1;
  s.action = buffer.at(decision).action;
  s.rewards.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) s.rewards.push_back(buffer.at(decision + k).reward);
  // s_{i+n} = [c_{i-M+1+n}, ..., c_{i+n}]: symbols of entries start+n .. start+len-1,
  // closed by the next symbol of the window's last entry.
  s.next_state.reserve(m);
  for (std::size_t k = steps; k < len; ++k) s.next_state.push_back(buffer.at(start + k).symbol);
  s.next_state.push_back(buffer.at(start + len - 1).next_symbol);
  s.next_state_key = buffer.absolute_index(start + len - 1);
  return s;
}

std::optional<ReplaySample> sample_window(const ExperienceBuffer& buffer, int history, int n,
                                          Rng& rng) {
  const std::size_t len = window_length(history, n);
  if (buffer.size() < len) return std::nullopt;
  const std::size_t start = static_cast<std::size_t>(rng.below(buffer.size() - len + 1));
  return reconstruct_window(buffer, start, history, n);
}

}  // namespace csdlma
