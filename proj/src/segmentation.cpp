#include "cosparse/segmentation.hpp"

#include <algorithm>

namespace cosparse {

std::vector<int> Segmentation::active_labels() const {
  int top = num_labels - 1;
  for (int l : labels.values()) top = std::max(top, l);
  std::vector<bool> seen(static_cast<std::size_t>(std::max(top + 1, 0)), false);
  for (int l : labels.values())
    if (l >= 0) seen[l] = true;
  std::vector<int> active;
  for (int l = 0; l < static_cast<int>(seen.size()); ++l)
    if (seen[l]) active.push_back(l);
  return active;
}

}  // namespace cosparse
