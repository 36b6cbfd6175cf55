#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "segfuse/segmentation.hpp"

namespace segfuse {

// J co-registered rasters of real-valued intensities over one pixel grid.
struct MultiBandImage {
    int width = 0;
    int height = 0;
    std::vector<std::vector<double>> bands;  // J vectors of width*height values
    std::vector<std::string> band_names;

    int n() const { return width * height; }
    int num_bands() const { return static_cast<int>(bands.size()); }
};

inline void validate(const MultiBandImage& img) {
    if (img.width <= 0 || img.height <= 0)
        throw std::invalid_argument("image: non-positive dimensions");
    if (img.bands.empty())
        throw std::invalid_argument("image: needs at least one band");
    for (const auto& b : img.bands)
        if (static_cast<int>(b.size()) != img.n())
            throw std::invalid_argument("image: band size != width*height");
}

// Lloyd k-means over per-pixel feature vectors (one coordinate per band),
// k-means++ seeding driven by seed, deterministic. Assignment ties go to the
// lowest centroid index; an emptied centroid is reseeded at the point
// farthest from its assigned centroid. Output labels are densified by first
// occurrence. If objective_history is given, it receives the within-cluster
// sum of squares after every assignment step (non-increasing).
Segmentation kmeans_segment(const MultiBandImage& img, int k, std::uint64_t seed,
                            int max_iter = 100,
                            std::vector<double>* objective_history = nullptr);

// One k-means run per band on that band's scalar intensities; K = J members.
// seeds must hold either one seed (used for every band) or J per-band seeds.
Ensemble band_ensemble(const MultiBandImage& img, int k, const std::vector<std::uint64_t>& seeds,
                       int max_iter = 100);

// Per-band z-scoring (zero mean, unit variance; constant bands left as zeros).
MultiBandImage zscore_bands(const MultiBandImage& img);

}  // namespace segfuse
