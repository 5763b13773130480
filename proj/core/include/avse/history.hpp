// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
// Absolute-indexed stream buffer: fixed-width items, append-only, with
// virtual all-zero items at negative indices (causal padding falls out of
// plain reads) and explicit forgetting of items that can no longer be read.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

#include "avse/common.hpp"

namespace avse {

class History {
 public:
  explicit History(int width = 1) : width_(width) {
    require(width >= 1, "history: width must be >= 1");
  }

  int width() const { return width_; }
  // Index one past the last appended item.
  std::int64_t end() const {
    return base_ + static_cast<std::int64_t>(store_.size() / static_cast<std::size_t>(width_));
  }
  // Smallest index still stored (indices below 0 are virtual zeros anyway).
  std::int64_t begin() const { return base_; }

  void append(const float* items, std::int64_t n) {
    require(n >= 0, "history: negative append");
    store_.insert(store_.end(), items,
                  items + static_cast<std::size_t>(n) * static_cast<std::size_t>(width_));
  }
  void append_zeros(std::int64_t n) {
    require(n >= 0, "history: negative append");
    store_.insert(store_.end(), static_cast<std::size_t>(n) * static_cast<std::size_t>(width_),
                  0.0f);
  }

  // Copy items [first, first + n) into dst. Negative indices read as zeros;
  // reading at or past end(), or below begin(), is a caller bug.
  void read(std::int64_t first, std::int64_t n, float* dst) const {
    require(n >= 0 && first + n <= end(), "history: read past end");
    std::int64_t i = first;
    if (i < 0) {  // leading virtual zeros
      const std::int64_t nz = std::min(n, -i);
      std::memset(dst, 0, static_cast<std::size_t>(nz) * width_ * sizeof(float));
      dst += nz * width_;
      i += nz;
    }
    const std::int64_t got = first + n - i;
    if (got <= 0) return;
    require(i >= base_, "history: read before begin (already forgotten)");
    std::memcpy(dst, store_.data() + static_cast<std::size_t>(i - base_) * width_,
                static_cast<std::size_t>(got) * width_ * sizeof(float));
  }

  // Pointer to one stored item (index must be in [begin, end)).
  const float* item(std::int64_t i) const {
    require(i >= base_ && i < end(), "history: item out of range");
    return store_.data() + static_cast<std::size_t>(i - base_) * width_;
  }

  // Forget items below `first` (no-op if already forgotten).
  void drop_before(std::int64_t first) {
    if (first <= base_) return;
    const std::int64_t upto = std::min(first, end());
    store_.erase(store_.begin(),
                 store_.begin() + static_cast<std::ptrdiff_t>((upto - base_) * width_));
    base_ = upto;
  }

  void clear() {
    store_.clear();
    base_ = 0;
  }

 private:
  int width_;
  std::int64_t base_ = 0;  // absolute index of store_[0]
  std::vector<float> store_;
};

}  // namespace avse
