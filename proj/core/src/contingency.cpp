#include "segfuse/contingency.hpp"

#include <stdexcept>

namespace segfuse {

ContingencyTable contingency(const Segmentation& a, const Segmentation& b) {
    if (a.n() != b.n())
        throw std::invalid_argument("contingency: segmentations differ in pixel count");
    ContingencyTable t;
    t.rows = a.num_labels;
    t.cols = b.num_labels;
    t.counts.assign(static_cast<std::size_t>(t.rows) * t.cols, 0);
    t.row_sums.assign(t.rows, 0);
    t.col_sums.assign(t.cols, 0);
    const int n = a.n();
    for (int i = 0; i < n; ++i)
        ++t.counts[static_cast<std::size_t>(a.labels[i]) * t.cols + b.labels[i]];
    for (int r = 0; r < t.rows; ++r)
        for (int c = 0; c < t.cols; ++c) {
            const std::int64_t v = t.at(r, c);
            t.row_sums[r] += v;
            t.col_sums[c] += v;
        }
    t.total = n;
    return t;
}

}  // namespace segfuse
