#pragma once

#include <vector>

#include "cosparse/field.hpp"

namespace cosparse {

/// Per-pixel class map. Labels are zero-based; -1 marks void pixels, which
/// only ground-truth maps may contain.
struct Segmentation {
  Field<int> labels;
  int num_labels = 0;

  /// Sorted labels that occur at least once.
  std::vector<int> active_labels() const;
};

}  // namespace cosparse
