#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "segfuse/constraints.hpp"
#include "segfuse/segmentation.hpp"
#include "segfuse/segmenters.hpp"

namespace segfuse {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LabelMapFormat { P2, P5, CSV };

// Result of reading a label map: labels densified to 0..C-1,
// original_values[dense] = value found in the file.
struct LabelMapData {
    Segmentation seg;
    std::vector<int> original_values;

    bool densified() const {
        for (std::size_t i = 0; i < original_values.size(); ++i)
            if (original_values[i] != static_cast<int>(i)) return true;
        return false;
    }
};

// Reads a portable graymap ("P2" ASCII or "P5" binary, 8- or 16-bit) or a CSV
// integer grid; the format is sniffed from the content. Pixel value = label.
LabelMapData read_label_map(const std::string& path);

// Writes dense labels as pixel values. Format from the explicit argument, or
// by extension (.csv -> CSV, anything else -> P2). P5 uses 16-bit big-endian
// samples when any label exceeds 255. Round-trips losslessly through
// read_label_map for all three formats.
void write_label_map(const Segmentation& s, const std::string& path);
void write_label_map(const Segmentation& s, const std::string& path, LabelMapFormat format);

// Records the dense-label mapping next to the data (one "original dense" pair
// per line).
void write_mapping_sidecar(const LabelMapData& data, const std::string& path);

// Constraint files: lines "ML <m> <l>" / "CL <m> <l>", '#' comments, blank
// lines ignored, duplicates collapsed; read applies closure + consistency
// check (throws InconsistentConstraints), with parse errors reporting the
// line number.
ConstraintSet read_constraints(const std::string& path);
void write_constraints(const ConstraintSet& cons, const std::string& path);

// Samples round(fraction * N*(N-1)/2) distinct pixel pairs uniformly without
// replacement (seeded); same-label pairs become must-link, different-label
// pairs cannot-link. Consistent by construction.
ConstraintSet constraints_from_ground_truth(const Segmentation& gt, double fraction,
                                            std::uint64_t seed);

// Multi-band images on disk: a manifest text file of per-band graymap paths
// (one relative path per line, '#' comments), bands read in listed order.
MultiBandImage read_multiband(const std::string& manifest_path);

// Writes one 16-bit-capable P2 graymap per band into dir and a manifest
// listing them; returns the manifest path. Intensities are rounded and
// clamped to [0, 65535].
std::string write_multiband(const MultiBandImage& img, const std::string& dir,
                            const std::string& manifest_name = "bands.txt");

// ---------------------------------------------------------------------------
// Synthetic benchmark data

enum class SiteLayout {
    Scatter,  // sites uniform over the grid (distinct)
    Strips,   // one site per vertical strip, jittered; every class spans all rows
};

struct SynthSpec {
    int width = 64;
    int height = 64;
    int num_classes = 6;
    int bands = 7;
    double noise_sigma = 10.0;
    std::uint64_t seed = 0;
    // Per-band separation of adjacent class means, in units of noise_sigma
    // (>= 3 enforced). Size must be 1 (broadcast) or bands.
    std::vector<double> spacing_factors = {3.0};
    // Fraction of the per-pixel noise shared across bands, in [0, 1); the
    // per-band marginal stays N(0, noise_sigma^2).
    double band_correlation = 0.0;
    SiteLayout layout = SiteLayout::Scatter;
};

// Voronoi-cell ground truth (nearest site by squared distance, ties to the
// lowest site index) plus per-band constant class intensities with additive
// Gaussian noise. Same seed, same dataset.
std::pair<MultiBandImage, Segmentation> generate_synthetic(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// Train/test splits

struct DatasetSplit {
    MultiBandImage train_image;
    Segmentation train_gt;
    MultiBandImage test_image;
    Segmentation test_gt;
    std::string split_spec;
};

// Rows [0, first_test_row) become the training image, the rest the test
// image. Both halves are real rectangular images.
DatasetSplit split_rows(const MultiBandImage& img, const Segmentation& gt, int first_test_row);

// Restricts a labeling to the pixels where mask is nonzero (for evaluation
// on masked regions; the result is a 1 x M "image" of the kept pixels in
// row-major order).
Segmentation apply_mask(const Segmentation& s, const std::vector<int>& mask);

}  // namespace segfuse
