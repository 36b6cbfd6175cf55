#include "segfuse/segmenters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "segfuse/rng.hpp"

namespace segfuse {

namespace {

double sq_dist(const MultiBandImage& img, int pixel, const std::vector<double>& centroid) {
    double s = 0.0;
    for (int j = 0; j < img.num_bands(); ++j) {
        const double diff = img.bands[j][pixel] - centroid[j];
        s += diff * diff;
    }
    return s;
}

}  // namespace

Segmentation kmeans_segment(const MultiBandImage& img, int k, std::uint64_t seed, int max_iter,
                            std::vector<double>* objective_history) {
    validate(img);
    if (k < 1) throw std::invalid_argument("kmeans_segment: k must be >= 1");
    if (max_iter < 1) throw std::invalid_argument("kmeans_segment: max_iter must be >= 1");
    const int n = img.n();
    const int bands = img.num_bands();
    if (k > n) k = n;

    Rng rng(seed);

    // k-means++ seeding: first centroid uniform, the rest proportional to the
    // squared distance to the nearest chosen centroid.
    std::vector<std::vector<double>> centroids;
    centroids.reserve(k);
    auto pixel_features = [&](int p) {
        std::vector<double> f(bands);
        for (int j = 0; j < bands; ++j) f[j] = img.bands[j][p];
        return f;
    };
    centroids.push_back(pixel_features(static_cast<int>(rng.uniform_index(n))));
    std::vector<double> best_d2(n);
    for (int c = 1; c < k; ++c) {
        double sum = 0.0;
        for (int p = 0; p < n; ++p) {
            double d2 = std::numeric_limits<double>::max();
            for (const auto& ctr : centroids) d2 = std::min(d2, sq_dist(img, p, ctr));
            best_d2[p] = d2;
            sum += d2;
        }
        int chosen;
        if (sum <= 0.0) {
            // all remaining points coincide with existing centroids
            chosen = static_cast<int>(rng.uniform_index(n));
        } else {
            const double target = rng.uniform01() * sum;
            double acc = 0.0;
            chosen = n - 1;
            for (int p = 0; p < n; ++p) {
                acc += best_d2[p];
                if (acc >= target) {
                    chosen = p;
                    break;
                }
            }
        }
        centroids.push_back(pixel_features(chosen));
    }

    std::vector<int> assign(n, 0);
    std::vector<std::vector<double>> sums(k, std::vector<double>(bands));
    std::vector<std::int64_t> counts(k);

    for (int iter = 0; iter < max_iter; ++iter) {
        // assignment; ties to the lowest centroid index
        bool changed = iter == 0;
        double objective = 0.0;
        for (int p = 0; p < n; ++p) {
            int best = 0;
            double bd = sq_dist(img, p, centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d2 = sq_dist(img, p, centroids[c]);
                if (d2 < bd) {
                    bd = d2;
                    best = c;
                }
            }
            objective += bd;
            if (assign[p] != best) {
                assign[p] = best;
                changed = true;
            }
        }
        if (objective_history) objective_history->push_back(objective);
        if (!changed) break;

        // update
        for (int c = 0; c < k; ++c) {
            std::fill(sums[c].begin(), sums[c].end(), 0.0);
            counts[c] = 0;
        }
        for (int p = 0; p < n; ++p) {
            ++counts[assign[p]];
            for (int j = 0; j < bands; ++j) sums[assign[p]][j] += img.bands[j][p];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (int j = 0; j < bands; ++j)
                    centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
            } else {
                // reseed an emptied centroid at the point farthest from its
                // assigned centroid
                int far_p = 0;
                double far_d = -1.0;
                for (int p = 0; p < n; ++p) {
                    const double d2 = sq_dist(img, p, centroids[assign[p]]);
                    if (d2 > far_d) {
                        far_d = d2;
                        far_p = p;
                    }
                }
                centroids[c] = pixel_features(far_p);
            }
        }
    }

    // densify labels by first occurrence
    std::vector<int> remap(k, -1);
    int next = 0;
    std::vector<int> labels(n);
    for (int p = 0; p < n; ++p) {
        if (remap[assign[p]] < 0) remap[assign[p]] = next++;
        labels[p] = remap[assign[p]];
    }
    Segmentation s;
    s.labels = std::move(labels);
    s.width = img.width;
    s.height = img.height;
    s.num_labels = next;
    return s;
}

Ensemble band_ensemble(const MultiBandImage& img, int k, const std::vector<std::uint64_t>& seeds,
                       int max_iter) {
    validate(img);
    const int J = img.num_bands();
    if (seeds.size() != 1 && static_cast<int>(seeds.size()) != J)
        throw std::invalid_argument("band_ensemble: need 1 or J seeds");
    Ensemble ens;
    for (int j = 0; j < J; ++j) {
        MultiBandImage one;
        one.width = img.width;
        one.height = img.height;
        one.bands.push_back(img.bands[j]);
        const std::uint64_t seed = seeds.size() == 1 ? seeds[0] : seeds[j];
        ens.members.push_back(kmeans_segment(one, k, seed, max_iter));
        std::string name = j < static_cast<int>(img.band_names.size())
                               ? img.band_names[j]
                               : "band" + std::to_string(j);
        ens.provenance.push_back("kmeans k=" + std::to_string(k) + " seed=" + std::to_string(seed) +
                                 " " + name);
    }
    return ens;
}

MultiBandImage zscore_bands(const MultiBandImage& img) {
    validate(img);
    MultiBandImage out = img;
    const double n = static_cast<double>(img.n());
    for (auto& band : out.bands) {
        double mean = 0.0;
        for (double v : band) mean += v;
        mean /= n;
        double var = 0.0;
        for (double v : band) var += (v - mean) * (v - mean);
        var /= n;
        const double sd = std::sqrt(var);
        for (double& v : band) v = sd > 0.0 ? (v - mean) / sd : 0.0;
    }
    return out;
}

}  // namespace segfuse
