#pragma once

#include <cstdint>
#include <vector>

#include "segfuse/segmentation.hpp"

namespace segfuse {

// Joint label counts between two segmentations over the same pixel grid.
// counts(a, b) = number of pixels with label a in the first segmentation and
// label b in the second. Marginals are cached.
struct ContingencyTable {
    int rows = 0;
    int cols = 0;
    std::vector<std::int64_t> counts;  // rows x cols, row-major
    std::vector<std::int64_t> row_sums;
    std::vector<std::int64_t> col_sums;
    std::int64_t total = 0;

    std::int64_t at(int a, int b) const { return counts[static_cast<std::size_t>(a) * cols + b]; }
    std::int64_t& at(int a, int b) { return counts[static_cast<std::size_t>(a) * cols + b]; }
};

ContingencyTable contingency(const Segmentation& a, const Segmentation& b);

}  // namespace segfuse
