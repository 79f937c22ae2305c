#pragma once

#include <string>
#include <vector>

#include "bheisr/corpus.hpp"

namespace bheisr {

// One recommendation list: baseline items first, then generated ones.
struct Feed {
  std::vector<Item> items;
  std::size_t original_count = 0;
  std::size_t generated_count = 0;
  double w = 0.0;
  std::size_t step = 0;
  bool short_pool = false;  // fewer eligible baseline items than requested
};

}  // namespace bheisr
