#include <random>

#include "doctest.h"
#include "segfuse/metrics.hpp"
#include "segfuse/segmenters.hpp"
#include "support/oracles.hpp"

using namespace segfuse;

namespace {

MultiBandImage two_block_image() {
    // left half ~0, right half ~100, both bands
    MultiBandImage img;
    img.width = 8;
    img.height = 4;
    img.bands.assign(2, std::vector<double>(32, 0.0));
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x)
            for (int j = 0; j < 2; ++j)
                img.bands[j][y * 8 + x] = x < 4 ? 0.0 : 100.0;
    return img;
}

Segmentation two_block_truth() {
    std::vector<int> labels(32);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 8; ++x) labels[y * 8 + x] = x < 4 ? 0 : 1;
    return make_segmentation(std::move(labels), 8, 4);
}

// 16x16, three horizontal stripes with well-separated means and mild noise
MultiBandImage three_cluster_image(std::uint64_t seed) {
    MultiBandImage img;
    img.width = 16;
    img.height = 16;
    img.bands.assign(1, std::vector<double>(256));
    std::mt19937_64 g(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            const int cls = y / 6 > 2 ? 2 : y / 6;
            img.bands[0][y * 16 + x] = 20.0 * cls + noise(g);
        }
    return img;
}

std::vector<std::vector<double>> as_points(const MultiBandImage& img) {
    std::vector<std::vector<double>> pts(static_cast<std::size_t>(img.n()));
    for (int p = 0; p < img.n(); ++p) {
        pts[p].resize(img.num_bands());
        for (int j = 0; j < img.num_bands(); ++j) pts[p][j] = img.bands[j][p];
    }
    return pts;
}

}  // namespace

TEST_SUITE("segmenters") {

TEST_CASE("kmeans recovers separable blocks exactly") {
    const MultiBandImage img = two_block_image();
    const Segmentation s = kmeans_segment(img, 2, 9);
    CHECK(adjusted_rand_index(s, two_block_truth()) == 1.0);
}

TEST_CASE("kmeans degenerate k") {
    const MultiBandImage img = two_block_image();
    const Segmentation one = kmeans_segment(img, 1, 3);
    CHECK(one.num_labels == 1);
    for (int v : one.labels) CHECK(v == 0);

    // more clusters than distinct feature vectors: labels stay dense
    const Segmentation over = kmeans_segment(img, 5, 3);
    CHECK_NOTHROW(validate(over));
    CHECK(over.num_labels <= 2);
}

TEST_CASE("kmeans objective history is non-increasing") {
    const MultiBandImage img = three_cluster_image(100);
    std::vector<double> history;
    kmeans_segment(img, 3, 17, 100, &history);
    REQUIRE(history.size() >= 1);
    for (std::size_t i = 1; i < history.size(); ++i)
        CHECK(history[i] <= history[i - 1] + 1e-9);
}

TEST_CASE("kmeans reproducible bit-for-bit") {
    const MultiBandImage img = three_cluster_image(101);
    const Segmentation a = kmeans_segment(img, 3, 55);
    const Segmentation b = kmeans_segment(img, 3, 55);
    CHECK(a.labels == b.labels);
    const Segmentation c = kmeans_segment(img, 3, 56);
    // different seed may differ, but both must be valid
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("kmeans matches 100-restart Lloyd oracle on most seeds") {
    const MultiBandImage img = three_cluster_image(102);
    const auto points = as_points(img);
    const double best = oracle::lloyd_restart_best(points, 3, 100, 999);
    int hits = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        const Segmentation s = kmeans_segment(img, 3, 1000 + t);
        if (oracle::wcss(points, s.labels) <= best + 1e-6) ++hits;
    }
    CHECK(hits >= 18);  // >= 90%
}

TEST_CASE("band_ensemble shapes and provenance") {
    MultiBandImage img = two_block_image();
    img.bands.push_back(img.bands[0]);  // three identical bands
    const Ensemble e = band_ensemble(img, 2, {7});
    CHECK(e.k() == 3);
    REQUIRE(e.provenance.size() == 3);
    CHECK(e.provenance[0].find("kmeans k=2") != std::string::npos);

    // identical bands, same seed -> identical members
    CHECK(e.members[0].labels == e.members[1].labels);
    CHECK(e.members[0].labels == e.members[2].labels);

    CHECK_THROWS_AS(band_ensemble(img, 2, {1, 2}), std::invalid_argument);  // 2 seeds, 3 bands
    const Ensemble per_seed = band_ensemble(img, 2, {1, 2, 3});
    CHECK(per_seed.k() == 3);
}

TEST_CASE("band_ensemble members differ when bands differ") {
    MultiBandImage img;
    img.width = 6;
    img.height = 1;
    img.bands = {{0, 0, 0, 9, 9, 9}, {0, 9, 9, 9, 0, 0}};
    const Ensemble e = band_ensemble(img, 2, {4});
    CHECK(sdd(e.members[0], e.members[1]) > 0);
}

TEST_CASE("zscore_bands normalizes and zeroes constant bands") {
    MultiBandImage img;
    img.width = 4;
    img.height = 1;
    img.bands = {{1, 2, 3, 4}, {5, 5, 5, 5}};
    const MultiBandImage z = zscore_bands(img);
    double mean = 0.0, var = 0.0;
    for (double v : z.bands[0]) mean += v;
    mean /= 4.0;
    for (double v : z.bands[0]) var += (v - mean) * (v - mean);
    var /= 4.0;
    CHECK(mean == doctest::Approx(0.0));
    CHECK(var == doctest::Approx(1.0));
    for (double v : z.bands[1]) CHECK(v == 0.0);
}

TEST_CASE("kmeans input validation") {
    const MultiBandImage img = two_block_image();
    CHECK_THROWS_AS(kmeans_segment(img, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(kmeans_segment(img, 2, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(kmeans_segment(MultiBandImage{}, 2, 1), std::invalid_argument);
}

}  // TEST_SUITE
