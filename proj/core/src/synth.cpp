#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "segfuse/io.hpp"
#include "segfuse/rng.hpp"

namespace segfuse {

namespace {

// Voronoi sites; layouts guarantee distinctness deterministically.
std::vector<std::pair<int, int>> place_sites(const SynthSpec& spec, Rng& rng) {
    const int C = spec.num_classes;
    std::vector<std::pair<int, int>> sites;  // (y, x)
    if (spec.layout == SiteLayout::Strips) {
        // one site per vertical strip, x jittered inside the strip, y jittered
        // around the middle rows: every class spans the full height, so any
        // horizontal split sees all classes
        for (int c = 0; c < C; ++c) {
            const int x0 = static_cast<int>(static_cast<std::int64_t>(c) * spec.width / C);
            const int x1 = static_cast<int>(static_cast<std::int64_t>(c + 1) * spec.width / C);
            const int x = x0 + static_cast<int>(rng.uniform_index(std::max(1, x1 - x0)));
            const int y_lo = spec.height / 4;
            const int y_span = std::max(1, spec.height / 2);
            const int y = y_lo + static_cast<int>(rng.uniform_index(y_span));
            sites.emplace_back(y, x);
        }
    } else {
        std::unordered_set<std::int64_t> used;
        while (static_cast<int>(sites.size()) < C) {
            const std::int64_t p =
                static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(spec.width) * spec.height));
            if (used.insert(p).second)
                sites.emplace_back(static_cast<int>(p / spec.width), static_cast<int>(p % spec.width));
        }
    }
    return sites;
}

}  // namespace

std::pair<MultiBandImage, Segmentation> generate_synthetic(const SynthSpec& spec) {
    if (spec.num_classes < 2) throw std::invalid_argument("generate_synthetic: need >= 2 classes");
    if (spec.bands < 1) throw std::invalid_argument("generate_synthetic: need >= 1 band");
    if (spec.width < 1 || spec.height < 1)
        throw std::invalid_argument("generate_synthetic: empty grid");
    if (static_cast<std::int64_t>(spec.num_classes) >
        static_cast<std::int64_t>(spec.width) * spec.height)
        throw std::invalid_argument("generate_synthetic: more classes than pixels");
    if (spec.noise_sigma < 0.0) throw std::invalid_argument("generate_synthetic: negative sigma");
    if (spec.band_correlation < 0.0 || spec.band_correlation >= 1.0)
        throw std::invalid_argument("generate_synthetic: band_correlation must be in [0, 1)");
    std::vector<double> factors = spec.spacing_factors;
    if (factors.empty()) factors.assign(1, 3.0);
    if (factors.size() == 1) factors.assign(spec.bands, factors[0]);
    if (static_cast<int>(factors.size()) != spec.bands)
        throw std::invalid_argument("generate_synthetic: need 1 or bands spacing factors");
    for (double f : factors)
        if (f < 3.0)
            throw std::invalid_argument("generate_synthetic: spacing factor below 3 breaks the "
                                        "separation contract");

    Rng rng(spec.seed);
    const int n = spec.width * spec.height;
    const int C = spec.num_classes;

    const auto sites = place_sites(spec, rng);
    std::vector<int> gt(n);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            int best = 0;
            std::int64_t bd = -1;
            for (int c = 0; c < C; ++c) {
                const std::int64_t dy = y - sites[c].first;
                const std::int64_t dx = x - sites[c].second;
                const std::int64_t d2 = dy * dy + dx * dx;
                if (bd < 0 || d2 < bd) {
                    bd = d2;
                    best = c;
                }
            }
            gt[y * spec.width + x] = best;
        }

    // shared noise field plus per-band residual; marginally N(0, sigma^2)
    const double rho = spec.band_correlation;
    std::vector<double> shared(n, 0.0);
    if (rho > 0.0)
        for (double& v : shared) v = rng.normal();
    const double res_scale = std::sqrt(1.0 - rho * rho);

    MultiBandImage img;
    img.width = spec.width;
    img.height = spec.height;
    for (int j = 0; j < spec.bands; ++j) {
        const double delta = std::max(factors[j] * spec.noise_sigma, 1.0);
        const double base = 4.0 * spec.noise_sigma;
        std::vector<double> band(n);
        for (int p = 0; p < n; ++p) {
            const double noise = rho * shared[p] + res_scale * rng.normal();
            double v = base + static_cast<double>(gt[p]) * delta + spec.noise_sigma * noise;
            v = std::round(v);
            band[p] = std::clamp(v, 0.0, 65535.0);
        }
        img.bands.push_back(std::move(band));
        img.band_names.push_back("band" + std::to_string(j));
    }

    Segmentation gts;
    gts.labels = std::move(gt);
    gts.width = spec.width;
    gts.height = spec.height;
    gts.num_labels = C;
    return {std::move(img), std::move(gts)};
}

ConstraintSet constraints_from_ground_truth(const Segmentation& gt, double fraction,
                                            std::uint64_t seed) {
    validate(gt);
    if (fraction <= 0.0 || fraction > 1.0)
        throw std::invalid_argument("constraints_from_ground_truth: fraction must be in (0, 1]");
    const std::int64_t n = gt.n();
    const std::int64_t total_pairs = n * (n - 1) / 2;
    const std::int64_t want = std::min<std::int64_t>(
        total_pairs, std::llround(fraction * static_cast<double>(total_pairs)));

    Rng rng(seed);
    std::unordered_set<std::int64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(want) * 2);
    ConstraintSet cons;
    while (static_cast<std::int64_t>(chosen.size()) < want) {
        const std::int64_t u =
            static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(total_pairs)));
        if (!chosen.insert(u).second) continue;
        // decode the triangular pair index: row m owns indices
        // [off(m), off(m+1)) with off(m) = m*n - m*(m+1)/2
        std::int64_t lo = 0, hi = n - 1;
        while (lo < hi) {
            const std::int64_t mid = (lo + hi + 1) / 2;
            const std::int64_t off = mid * n - mid * (mid + 1) / 2;
            if (off <= u) lo = mid;
            else hi = mid - 1;
        }
        const std::int64_t m = lo;
        const std::int64_t off_m = m * n - m * (m + 1) / 2;
        const std::int64_t l = m + 1 + (u - off_m);
        const auto pair = std::make_pair(static_cast<int>(m), static_cast<int>(l));
        if (gt.labels[pair.first] == gt.labels[pair.second])
            cons.must_link.push_back(pair);
        else
            cons.cannot_link.push_back(pair);
    }
    return normalize_constraints(std::move(cons));
}

DatasetSplit split_rows(const MultiBandImage& img, const Segmentation& gt, int first_test_row) {
    validate(img);
    validate(gt);
    if (img.width != gt.width || img.height != gt.height)
        throw std::invalid_argument("split_rows: image and ground truth dimensions differ");
    if (first_test_row <= 0 || first_test_row >= img.height)
        throw std::invalid_argument("split_rows: split row must leave both halves non-empty");

    auto take_rows = [&](int y0, int y1) {
        MultiBandImage part;
        part.width = img.width;
        part.height = y1 - y0;
        part.band_names = img.band_names;
        for (const auto& band : img.bands)
            part.bands.emplace_back(band.begin() + static_cast<std::ptrdiff_t>(y0) * img.width,
                                    band.begin() + static_cast<std::ptrdiff_t>(y1) * img.width);
        Segmentation sub;
        sub.labels.assign(gt.labels.begin() + static_cast<std::ptrdiff_t>(y0) * img.width,
                          gt.labels.begin() + static_cast<std::ptrdiff_t>(y1) * img.width);
        sub.width = img.width;
        sub.height = y1 - y0;
        sub.num_labels = gt.num_labels;
        return std::make_pair(std::move(part), std::move(sub));
    };

    DatasetSplit split;
    auto [tr_img, tr_gt] = take_rows(0, first_test_row);
    auto [te_img, te_gt] = take_rows(first_test_row, img.height);
    split.train_image = std::move(tr_img);
    split.train_gt = std::move(tr_gt);
    split.test_image = std::move(te_img);
    split.test_gt = std::move(te_gt);
    split.split_spec = "rows [0, " + std::to_string(first_test_row) + ") train, [" +
                       std::to_string(first_test_row) + ", " + std::to_string(img.height) +
                       ") test";
    return split;
}

Segmentation apply_mask(const Segmentation& s, const std::vector<int>& mask) {
    if (mask.size() != s.labels.size())
        throw std::invalid_argument("apply_mask: mask size mismatch");
    std::vector<int> kept;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i] != 0) kept.push_back(s.labels[i]);
    if (kept.empty()) throw std::invalid_argument("apply_mask: mask keeps no pixels");
    Segmentation out;
    out.width = static_cast<int>(kept.size());
    out.height = 1;
    out.num_labels = s.num_labels;
    out.labels = std::move(kept);
    return out;
}

}  // namespace segfuse
