#pragma once

#include "vmptrack/types.hpp"

namespace vmptrack {

// Matched-filter output of one frame.  noise_precision holds the diagonal of
// the (diagonal) noise precision matrix, entry-aligned with data.
struct Snapshot {
  int step = 0;
  CVec data;
  RVec noise_precision;

  Eigen::Index size() const { return data.size(); }
};

}  // namespace vmptrack
