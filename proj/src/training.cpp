#include "lrce/training.hpp"

#include <algorithm>

namespace lrce {

BatchSampler::BatchSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
  if (n == 0) throw std::invalid_argument("BatchSampler: empty dataset");
  for (std::size_t i = 0; i < n; ++i) order_[i] = i;
  reshuffle();
}

void BatchSampler::reshuffle() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::next(std::size_t batch_size) {
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  while (out.size() < batch_size) {
    if (cursor_ == order_.size()) reshuffle();
    out.push_back(order_[cursor_++]);
    if (out.size() == order_.size()) break;
  }
  return out;
}

}  // namespace lrce
