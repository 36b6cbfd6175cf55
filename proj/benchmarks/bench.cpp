// micro-benchmarks for the hot paths: pair metrics, move deltas, the weight
// solvers, Bregman distances, and full fusion runs at the 64x64 working size
#include <benchmark/benchmark.h>

#include <random>

#include "segfuse/constraints.hpp"
#include "segfuse/contingency.hpp"
#include "segfuse/fusion.hpp"
#include "segfuse/io.hpp"
#include "segfuse/metrics.hpp"
#include "segfuse/segmenters.hpp"
#include "segfuse/solver.hpp"

using namespace segfuse;

namespace {

Segmentation random_map(std::mt19937_64& g, int w, int h, int c) {
    Segmentation s;
    s.width = w;
    s.height = h;
    s.num_labels = c;
    s.labels.resize(static_cast<std::size_t>(w) * h);
    std::uniform_int_distribution<int> pick(0, c - 1);
    for (int& v : s.labels) v = pick(g);
    return s;
}

// one synthetic working set shared by the fusion-scale benchmarks
struct Workset {
    MultiBandImage image;
    Segmentation gt;
    Ensemble ensemble;
    ConstraintSet constraints;
};

const Workset& workset() {
    static const Workset w = [] {
        SynthSpec spec;
        spec.width = 64;
        spec.height = 64;
        spec.num_classes = 6;
        spec.bands = 6;
        spec.noise_sigma = 10.0;
        spec.seed = 7;
        Workset out;
        auto [img, gt] = generate_synthetic(spec);
        out.image = std::move(img);
        out.gt = std::move(gt);
        out.ensemble = band_ensemble(out.image, 6, {11});
        out.constraints = constraints_from_ground_truth(out.gt, 0.01, 13);
        return out;
    }();
    return w;
}

void bm_contingency(benchmark::State& state) {
    std::mt19937_64 g(1);
    const Segmentation a = random_map(g, 64, 64, 6);
    const Segmentation b = random_map(g, 64, 64, 6);
    for (auto _ : state) benchmark::DoNotOptimize(contingency(a, b));
}
BENCHMARK(bm_contingency);

void bm_sdd(benchmark::State& state) {
    std::mt19937_64 g(2);
    const Segmentation a = random_map(g, 64, 64, 6);
    const Segmentation b = random_map(g, 64, 64, 6);
    for (auto _ : state) benchmark::DoNotOptimize(sdd(a, b));
}
BENCHMARK(bm_sdd);

void bm_adjusted_rand_index(benchmark::State& state) {
    std::mt19937_64 g(3);
    const Segmentation a = random_map(g, 64, 64, 6);
    const Segmentation b = random_map(g, 64, 64, 6);
    for (auto _ : state) benchmark::DoNotOptimize(adjusted_rand_index(a, b));
}
BENCHMARK(bm_adjusted_rand_index);

void bm_adjusted_mutual_information(benchmark::State& state) {
    std::mt19937_64 g(4);
    const Segmentation a = random_map(g, 64, 64, 6);
    const Segmentation b = random_map(g, 64, 64, 6);
    for (auto _ : state) benchmark::DoNotOptimize(adjusted_mutual_information(a, b));
}
BENCHMARK(bm_adjusted_mutual_information);

// one full candidate scan: every (pixel, label) move delta against one member,
// the per-iteration workload of the fusion loop
void bm_move_delta_scan(benchmark::State& state) {
    std::mt19937_64 g(5);
    const Segmentation ref = random_map(g, 64, 64, 6);
    const Segmentation cur = random_map(g, 64, 64, 6);
    const ContingencyTable t = contingency(ref, cur);
    for (auto _ : state) {
        std::int64_t best = 0;
        for (int n = 0; n < cur.n(); ++n)
            for (int c = 0; c < 6; ++c) best = std::min(best, move_delta(ref, cur, t, n, c));
        benchmark::DoNotOptimize(best);
    }
}
BENCHMARK(bm_move_delta_scan);

void bm_solve_quadratic(benchmark::State& state) {
    std::mt19937_64 g(6);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> d(8);
    for (double& v : d) v = unit(g);
    SolverConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(solve_quadratic(d, cfg));
}
BENCHMARK(bm_solve_quadratic);

void bm_solve_l1(benchmark::State& state) {
    std::mt19937_64 g(7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> d(8);
    for (double& v : d) v = unit(g);
    SolverConfig cfg;  // lambda auto
    for (auto _ : state) benchmark::DoNotOptimize(solve_l1(d, cfg));
}
BENCHMARK(bm_solve_l1);

void bm_bregman_distance(benchmark::State& state) {
    const Workset& w = workset();
    const std::vector<double> weights(w.ensemble.k(), 1.0 / w.ensemble.k());
    const SoftConnectivity p = consensus_connectivity(w.ensemble, weights, w.constraints);
    for (auto _ : state)
        benchmark::DoNotOptimize(bregman_connectivity_distance(p, w.ensemble.members[0]));
}
BENCHMARK(bm_bregman_distance);

void bm_kmeans_7band(benchmark::State& state) {
    SynthSpec spec;
    spec.width = 64;
    spec.height = 64;
    spec.num_classes = 6;
    spec.bands = 7;
    spec.noise_sigma = 10.0;
    spec.seed = 17;
    const auto [img, gt] = generate_synthetic(spec);
    for (auto _ : state) benchmark::DoNotOptimize(kmeans_segment(img, 6, 23));
}
BENCHMARK(bm_kmeans_7band)->Unit(benchmark::kMillisecond);

void bm_fuse_usf_64(benchmark::State& state) {
    const Workset& w = workset();
    FusionConfig cfg;
    cfg.T = 100;
    cfg.seed = 29;
    for (auto _ : state) benchmark::DoNotOptimize(fuse_usf(w.ensemble, cfg));
}
BENCHMARK(bm_fuse_usf_64)->Unit(benchmark::kMillisecond);

void bm_fuse_sssf_64(benchmark::State& state) {
    const Workset& w = workset();
    FusionConfig cfg;
    cfg.T = 100;
    cfg.seed = 31;
    for (auto _ : state)
        benchmark::DoNotOptimize(fuse_sssf(w.ensemble, w.constraints, cfg));
}
BENCHMARK(bm_fuse_sssf_64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
