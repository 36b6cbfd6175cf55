#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace segfuse {

// A hard labeling of the pixels of a width x height grid. Labels are dense
// integers in [0, num_labels); num_labels may exceed the number of labels
// actually present (empty labels are permitted).
struct Segmentation {
    std::vector<int> labels;
    int width = 0;
    int height = 0;
    int num_labels = 0;

    int n() const { return width * height; }
};

inline void validate(const Segmentation& s) {
    if (s.width <= 0 || s.height <= 0)
        throw std::invalid_argument("segmentation: non-positive dimensions");
    if (static_cast<int>(s.labels.size()) != s.n())
        throw std::invalid_argument("segmentation: label count != width*height");
    for (int v : s.labels)
        if (v < 0 || v >= s.num_labels)
            throw std::invalid_argument("segmentation: label " + std::to_string(v) +
                                        " outside [0, " + std::to_string(s.num_labels) + ")");
}

// Builds a Segmentation from raw labels, inferring num_labels = max+1.
inline Segmentation make_segmentation(std::vector<int> labels, int width, int height) {
    Segmentation s;
    s.labels = std::move(labels);
    s.width = width;
    s.height = height;
    int mx = -1;
    for (int v : s.labels) mx = v > mx ? v : mx;
    s.num_labels = mx + 1;
    validate(s);
    return s;
}

// Remaps arbitrary nonnegative label values to dense 0..C-1 in order of first
// appearance of the sorted distinct values. Returns the dense segmentation and
// fills original_values[dense] = original.
Segmentation densify_labels(const std::vector<int>& raw, int width, int height,
                            std::vector<int>* original_values);

// An ordered list of K segmentations over the same pixel grid.
struct Ensemble {
    std::vector<Segmentation> members;
    std::vector<std::string> provenance;

    int k() const { return static_cast<int>(members.size()); }
    int width() const { return members.empty() ? 0 : members.front().width; }
    int height() const { return members.empty() ? 0 : members.front().height; }
    int n() const { return width() * height(); }
};

inline void validate(const Ensemble& e) {
    if (e.members.empty())
        throw std::invalid_argument("ensemble: needs at least one member");
    for (const auto& m : e.members) {
        validate(m);
        if (m.width != e.width() || m.height != e.height())
            throw std::invalid_argument("ensemble: members disagree on grid dimensions");
    }
    if (!e.provenance.empty() && e.provenance.size() != e.members.size())
        throw std::invalid_argument("ensemble: provenance size mismatch");
}

}  // namespace segfuse
