#pragma once

#include "frugal/linalg.hpp"

#include <cstdint>
#include <vector>

namespace frugal {

using SampleId = std::uint32_t;

/// +1 means the after-patch shows a relevant change.
enum class Label : std::int8_t { NoChange = -1, Change = 1 };

inline int to_int(Label y) noexcept { return static_cast<int>(y); }
Label label_from_int(int value);

struct LabeledSample {
  Vector x;
  Label label = Label::NoChange;
};

using LabeledSet = std::vector<LabeledSample>;

}  // namespace frugal
