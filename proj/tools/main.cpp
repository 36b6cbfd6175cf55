// segfuse command-line front end: synthetic data generation, base-layer
// segmentation, constraint derivation, consensus fusion, evaluation, and
// parameter search.  All verbs are deterministic under --seed; outputs are
// graymaps or CSV, logs go to standard error.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "segfuse/fusion.hpp"
#include "segfuse/io.hpp"
#include "segfuse/metrics.hpp"
#include "segfuse/rng.hpp"
#include "segfuse/segmenters.hpp"

namespace fs = std::filesystem;
using namespace segfuse;

namespace {

// round-trippable formatting so identical runs emit identical bytes
std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_metric(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

double parse_lambda(const std::string& s) {
    if (s == "auto") return -1.0;
    return std::stod(s);
}

const CLI::Validator lambda_or_auto(
    [](std::string& s) -> std::string {
        if (s == "auto") return {};
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size() || v < 0.0 || !std::isfinite(v))
                return "must be 'auto' or a nonnegative number";
        } catch (const std::exception&) {
            return "must be 'auto' or a nonnegative number";
        }
        return {};
    },
    "LAMBDA");

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << content;
    if (!out) throw IoError("write failed: " + path.string());
}

// a .txt member argument is an ensemble manifest: one label-map path per
// line, relative to the manifest, '#' comments and blank lines ignored
std::vector<std::string> expand_members(const std::vector<std::string>& args) {
    std::vector<std::string> paths;
    for (const std::string& arg : args) {
        if (fs::path(arg).extension() != ".txt") {
            paths.push_back(arg);
            continue;
        }
        std::ifstream in(arg);
        if (!in) throw IoError("cannot open member manifest: " + arg);
        const fs::path base = fs::path(arg).parent_path();
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos) continue;
            const auto last = line.find_last_not_of(" \t\r");
            paths.push_back((base / line.substr(first, last - first + 1)).string());
        }
        if (paths.empty()) throw IoError("member manifest lists no label maps: " + arg);
    }
    return paths;
}

Ensemble load_ensemble(const std::vector<std::string>& member_args) {
    const std::vector<std::string> paths = expand_members(member_args);
    Ensemble ens;
    for (const std::string& p : paths) {
        ens.members.push_back(read_label_map(p).seg);
        ens.provenance.push_back(p);
    }
    validate(ens);
    return ens;
}

std::string weights_csv(const FusionResult& r, const std::vector<std::string>& sources) {
    std::string out = "member,source,weight\n";
    for (std::size_t i = 0; i < r.weights.size(); ++i) {
        out += std::to_string(i) + ',' + (i < sources.size() ? sources[i] : "") + ',' +
               fmt_double(r.weights[i]) + '\n';
    }
    return out;
}

// --weights takes either an inline comma-separated vector or the path of a
// weights CSV written by a previous run (member,source,weight).
std::vector<double> weights_from_arg(const std::vector<std::string>& raw) {
    const auto number = [](const std::string& tok, const char* what) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size() || !std::isfinite(v))
            throw std::runtime_error('\'' + tok + "' " + what);
        return v;
    };
    std::vector<double> w;
    if (raw.size() == 1 && fs::exists(raw[0])) {
        std::ifstream in(raw[0]);
        std::string line;
        for (int row = 0; std::getline(in, line); ++row) {
            if (row == 0 || line.empty()) continue;  // header
            const auto comma = line.rfind(',');
            if (comma == std::string::npos)
                throw std::runtime_error('\'' + raw[0] + "' is not a weights CSV");
            w.push_back(number(line.substr(comma + 1), "is not a weight"));
        }
        if (w.empty()) throw std::runtime_error('\'' + raw[0] + "' holds no weight rows");
        return w;
    }
    w.reserve(raw.size());
    for (const std::string& tok : raw)
        w.push_back(number(tok, "is neither a number nor an existing weights CSV"));
    return w;
}

std::string log_csv(const FusionResult& r) {
    std::string out = "t,member,pixel,to_label,h_value,delta,accepted,objective\n";
    for (const IterationLogEntry& e : r.log) {
        out += std::to_string(e.t) + ',' + std::to_string(e.member) + ',' +
               std::to_string(e.pixel) + ',' + std::to_string(e.to_label) + ',' +
               fmt_double(e.h_value) + ',' + fmt_double(e.exact_delta) + ',' +
               (e.accepted ? "1" : "0") + ',' + fmt_double(e.objective) + '\n';
    }
    return out;
}

struct SynthArgs {
    std::string out_dir;
    SynthSpec spec;
    std::string layout = "scatter";
    int split_row = -1;
};

int run_synth(const SynthArgs& a) {
    SynthSpec spec = a.spec;
    spec.layout = a.layout == "strips" ? SiteLayout::Strips : SiteLayout::Scatter;
    const auto [img, gt] = generate_synthetic(spec);
    fs::create_directories(a.out_dir);
    write_multiband(img, a.out_dir);
    write_label_map(gt, (fs::path(a.out_dir) / "gt.pgm").string());
    if (a.split_row >= 0) {
        const DatasetSplit split = split_rows(img, gt, a.split_row);
        for (const char* part : {"train", "test"}) {
            const bool is_train = std::string(part) == "train";
            const fs::path dir = fs::path(a.out_dir) / part;
            fs::create_directories(dir);
            write_multiband(is_train ? split.train_image : split.test_image, dir.string());
            write_label_map(is_train ? split.train_gt : split.test_gt,
                            (dir / "gt.pgm").string());
        }
    }
    std::cerr << "synth: wrote " << img.num_bands() << " bands (" << img.width << "x"
              << img.height << ", " << spec.num_classes << " classes) to " << a.out_dir
              << "\n";
    return 0;
}

struct SegmentArgs {
    std::string image;
    std::string out_dir;
    int k = 6;
    std::uint64_t seed = 0;
    bool per_band = false;
    bool zscore = false;
};

int run_segment(const SegmentArgs& a) {
    MultiBandImage img = read_multiband(a.image);
    if (a.zscore) zscore_bands(img);
    Ensemble ens;
    if (a.per_band) {
        ens = band_ensemble(img, a.k, {a.seed});
    } else {
        ens.members.push_back(kmeans_segment(img, a.k, a.seed));
        ens.provenance.push_back("kmeans k=" + std::to_string(a.k) +
                                 " seed=" + std::to_string(a.seed) + " all-bands");
    }
    fs::create_directories(a.out_dir);
    std::string manifest = "# ensemble members in order\n";
    for (int i = 0; i < ens.k(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "member_%02d.pgm", i);
        write_label_map(ens.members[i], (fs::path(a.out_dir) / name).string());
        manifest += std::string("# ") + name + ": " + ens.provenance[i] + '\n';
        manifest += std::string(name) + '\n';
    }
    write_text_file(fs::path(a.out_dir) / "ensemble.txt", manifest);
    std::cerr << "segment: wrote " << ens.k() << " member label maps to " << a.out_dir
              << "\n";
    return 0;
}

struct ConstraintArgs {
    std::string gt;
    std::string out;
    double fraction = 0.05;
    std::uint64_t seed = 0;
};

int run_constraints(const ConstraintArgs& a) {
    const Segmentation gt = read_label_map(a.gt).seg;
    const ConstraintSet cons = constraints_from_ground_truth(gt, a.fraction, a.seed);
    write_constraints(cons, a.out);
    std::cerr << "constraints: " << cons.must_link.size() << " must-link, "
              << cons.cannot_link.size() << " cannot-link -> " << a.out << "\n";
    return 0;
}

struct FuseArgs {
    std::vector<std::string> members;
    std::string mode = "usf";
    std::string constraints;
    std::string out;
    std::string weights_out;
    std::string log_out;
    std::string lambda = "auto";
    std::vector<std::string> weights_arg;
    std::vector<double> fixed_weights;
    double beta = 0.9;
    double penalty = 1.0;
    int T = 1000;
    int c_hat = 0;
    int solver_iters = 1000;
    std::uint64_t seed = 0;
};

int run_fuse(const FuseArgs& a) {
    const Ensemble ens = load_ensemble(a.members);

    FusionConfig cfg;
    cfg.beta = a.beta;
    cfg.T = a.T;
    cfg.C_hat = a.c_hat;
    cfg.seed = a.seed;
    cfg.solver.lambda = parse_lambda(a.lambda);
    cfg.solver.penalty = a.penalty;
    cfg.solver.max_iter = a.solver_iters;
    if (!a.fixed_weights.empty()) cfg.fixed_weights = a.fixed_weights;

    FusionResult result;
    if (a.mode == "sssf") {
        ConstraintSet cons;
        if (!a.constraints.empty()) cons = read_constraints(a.constraints);
        result = fuse_sssf(ens, cons, cfg);
    } else {
        result = fuse_usf(ens, cfg);
    }

    write_label_map(result.consensus, a.out);
    const fs::path out_path(a.out);
    const fs::path stem = out_path.parent_path() / out_path.stem();
    const std::string wpath =
        a.weights_out.empty() ? stem.string() + ".weights.csv" : a.weights_out;
    const std::string lpath = a.log_out.empty() ? stem.string() + ".log.csv" : a.log_out;
    write_text_file(wpath, weights_csv(result, ens.provenance));
    write_text_file(lpath, log_csv(result));

    std::cerr << "fuse: mode=" << a.mode << " iterations=" << result.iterations
              << " accepted=" << result.accepted_moves << " objective=" << result.objective
              << " repairs=" << result.repair_relabels
              << (result.solver_warning ? " (weight solver hit its iteration cap)" : "")
              << "\n";
    return 0;
}

struct EvalArgs {
    std::string gt;
    std::vector<std::string> preds;  // name=path or bare path
};

int run_evaluate(const EvalArgs& a) {
    const Segmentation gt = read_label_map(a.gt).seg;
    std::vector<std::string> names;
    std::vector<Segmentation> preds;
    for (const std::string& entry : a.preds) {
        const auto eq = entry.find('=');
        std::string name, path;
        if (eq != std::string::npos && eq > 0) {
            name = entry.substr(0, eq);
            path = entry.substr(eq + 1);
        } else {
            path = entry;
            name = fs::path(entry).stem().string();
        }
        names.push_back(name);
        preds.push_back(read_label_map(path).seg);
    }

    // rows = metric, columns = method
    std::string header = "metric";
    for (const std::string& n : names) header += ',' + n;
    std::cout << header << '\n';
    const char* metric_names[3] = {"RI", "ARI", "AMI"};
    for (int m = 0; m < 3; ++m) {
        std::string row = metric_names[m];
        for (const Segmentation& p : preds) {
            double v = 0.0;
            if (m == 0)
                v = rand_index(p, gt);
            else if (m == 1)
                v = adjusted_rand_index(p, gt);
            else
                v = adjusted_mutual_information(p, gt);
            row += ',' + fmt_metric(v);
        }
        std::cout << row << '\n';
    }
    return 0;
}

struct SearchArgs {
    std::string image;
    std::string gt;
    std::string mode = "usf";
    std::string constraints;
    std::string out;
    std::string lambda = "auto";
    double penalty = 1.0;
    int T = 1000;
    int jobs = 1;
    bool zscore = false;
    std::uint64_t seed = 0;
};

struct GridPoint {
    int c = 0;
    double beta = 0.0;
    double ri = 0.0;
    double ari = 0.0;
    double ami = 0.0;
    double objective = 0.0;
    int iterations = 0;
    int accepted = 0;
};

int run_param_search(const SearchArgs& a) {
    MultiBandImage img = read_multiband(a.image);
    if (a.zscore) zscore_bands(img);
    const Segmentation gt = read_label_map(a.gt).seg;
    if (gt.width != img.width || gt.height != img.height)
        throw std::invalid_argument("param-search: ground truth does not match image size");
    ConstraintSet cons;
    if (!a.constraints.empty()) cons = read_constraints(a.constraints);

    const std::vector<double> betas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99};
    const int num_c = 9;  // c = 2..10
    std::vector<GridPoint> grid(num_c * betas.size());

    // grid points are embarrassingly parallel; each draws its own seeds from
    // the master so the result is independent of --jobs and worker order
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;
    auto worker = [&]() {
        for (;;) {
            const int idx = next.fetch_add(1);
            if (idx >= static_cast<int>(grid.size()) || failed.load()) return;
            try {
                const int c = 2 + idx / static_cast<int>(betas.size());
                const double beta = betas[idx % betas.size()];
                const std::uint64_t point_seed =
                    derive_seed(a.seed, static_cast<std::uint64_t>(idx));
                const Ensemble ens = band_ensemble(img, c, {derive_seed(point_seed, 0)});
                FusionConfig cfg;
                cfg.beta = beta;
                cfg.T = a.T;
                cfg.seed = derive_seed(point_seed, 1);
                cfg.solver.lambda = parse_lambda(a.lambda);
                cfg.solver.penalty = a.penalty;
                const FusionResult r = a.mode == "sssf" ? fuse_sssf(ens, cons, cfg)
                                                        : fuse_usf(ens, cfg);
                GridPoint& pt = grid[idx];
                pt.c = c;
                pt.beta = beta;
                pt.ri = rand_index(r.consensus, gt);
                pt.ari = adjusted_rand_index(r.consensus, gt);
                pt.ami = adjusted_mutual_information(r.consensus, gt);
                pt.objective = r.objective;
                pt.iterations = r.iterations;
                pt.accepted = r.accepted_moves;
            } catch (const std::exception& ex) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (first_error.empty()) first_error = ex.what();
                failed.store(true);
                return;
            }
        }
    };

    const int jobs = std::max(1, a.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }
    if (failed.load()) throw std::runtime_error("param-search: " + first_error);

    std::string csv = "c,beta,ri,ari,ami,objective,iterations,accepted\n";
    int best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const GridPoint& p = grid[i];
        csv += std::to_string(p.c) + ',' + fmt_metric(p.beta) + ',' + fmt_metric(p.ri) +
               ',' + fmt_metric(p.ari) + ',' + fmt_metric(p.ami) + ',' +
               fmt_double(p.objective) + ',' + std::to_string(p.iterations) + ',' +
               std::to_string(p.accepted) + '\n';
        if (p.ari > grid[best].ari) best = static_cast<int>(i);  // ties: first in grid order
    }
    write_text_file(a.out, csv);

    std::cout << "c,beta,ari\n"
              << grid[best].c << ',' << fmt_metric(grid[best].beta) << ','
              << fmt_metric(grid[best].ari) << '\n';
    std::cerr << "param-search: " << grid.size() << " runs, best c=" << grid[best].c
              << " beta=" << grid[best].beta << " ari=" << grid[best].ari << " -> " << a.out
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"consensus segmentation fusion toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "key=value config file with one [verb] section per subcommand; "
                   "command-line flags override config values");
    app.allow_config_extras(CLI::config_extras_mode::error);

    SynthArgs synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic multiband dataset");
    synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();
    synth_cmd->add_option("--width", synth.spec.width, "image width");
    synth_cmd->add_option("--height", synth.spec.height, "image height");
    synth_cmd->add_option("--classes", synth.spec.num_classes, "ground-truth classes");
    synth_cmd->add_option("--bands", synth.spec.bands, "number of bands");
    synth_cmd->add_option("--sigma", synth.spec.noise_sigma, "noise standard deviation");
    synth_cmd->add_option("--seed", synth.spec.seed, "random seed");
    synth_cmd->add_option("--factors", synth.spec.spacing_factors,
                          "per-band class-mean spacing factors (units of sigma)")
        ->delimiter(',');
    synth_cmd->add_option("--band-correlation", synth.spec.band_correlation,
                          "shared noise fraction across bands, in [0,1)");
    synth_cmd->add_option("--layout", synth.layout, "ground-truth site layout")
        ->check(CLI::IsMember({"scatter", "strips"}));
    synth_cmd->add_option("--split-row", synth.split_row,
                          "also write train/ (rows above) and test/ (rows below)");

    SegmentArgs seg;
    CLI::App* seg_cmd = app.add_subcommand("segment", "k-means base segmentation");
    seg_cmd->add_option("--image", seg.image, "multiband manifest")
        ->required()
        ->check(CLI::ExistingFile);
    seg_cmd->add_option("--k", seg.k, "number of clusters")->required();
    seg_cmd->add_option("--seed", seg.seed, "random seed");
    seg_cmd->add_flag("--per-band", seg.per_band, "one member per band");
    seg_cmd->add_flag("--zscore", seg.zscore, "z-score each band first");
    seg_cmd->add_option("--out", seg.out_dir, "output directory")->required();

    ConstraintArgs con;
    CLI::App* con_cmd =
        app.add_subcommand("constraints", "derive pairwise constraints from ground truth");
    con_cmd->add_option("--gt", con.gt, "ground-truth label map")
        ->required()
        ->check(CLI::ExistingFile);
    con_cmd->add_option("--fraction", con.fraction, "fraction of pixel pairs to sample");
    con_cmd->add_option("--seed", con.seed, "random seed");
    con_cmd->add_option("--out", con.out, "constraint file to write")->required();

    FuseArgs fuse;
    CLI::App* fuse_cmd = app.add_subcommand("fuse", "fuse an ensemble into a consensus map");
    fuse_cmd->add_option("--members", fuse.members,
                         "member label maps, or a .txt manifest listing them")
        ->required()
        ->check(CLI::ExistingFile);
    fuse_cmd->add_option("--mode", fuse.mode, "fusion mode")
        ->check(CLI::IsMember({"usf", "sssf"}));
    fuse_cmd->add_option("--constraints", fuse.constraints, "constraint file (sssf)")
        ->check(CLI::ExistingFile);
    fuse_cmd->add_option("--beta", fuse.beta, "move-matrix decay in [0,1]");
    fuse_cmd->add_option("--T", fuse.T, "iteration budget");
    fuse_cmd->add_option("--c-hat", fuse.c_hat, "consensus label budget (0 = auto)");
    fuse_cmd->add_option("--seed", fuse.seed, "random seed");
    fuse_cmd->add_option("--lambda", fuse.lambda, "l1 weight ('auto' = half the max distance)")
        ->check(lambda_or_auto);
    fuse_cmd->add_option("--penalty", fuse.penalty, "ADMM penalty parameter");
    fuse_cmd->add_option("--solver-iters", fuse.solver_iters, "ADMM iteration cap");
    fuse_cmd->add_option("--weights", fuse.weights_arg,
                         "fixed member weights, inline (w1,w2,...) or a weights CSV "
                         "from a previous run (skip weight learning)")
        ->delimiter(',');
    fuse_cmd->add_option("--out", fuse.out, "consensus label map to write")->required();
    fuse_cmd->add_option("--weights-out", fuse.weights_out,
                         "weights CSV (default: alongside --out)");
    fuse_cmd->add_option("--log-out", fuse.log_out,
                         "iteration log CSV (default: alongside --out)");

    EvalArgs eval;
    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "score predictions against ground truth");
    eval_cmd->add_option("--gt", eval.gt, "ground-truth label map")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--pred", eval.preds, "prediction maps (name=path or path)")
        ->required();

    SearchArgs search;
    CLI::App* search_cmd =
        app.add_subcommand("param-search", "grid search over label budget and decay");
    search_cmd->add_option("--image", search.image, "training multiband manifest")
        ->required()
        ->check(CLI::ExistingFile);
    search_cmd->add_option("--gt", search.gt, "training ground truth")
        ->required()
        ->check(CLI::ExistingFile);
    search_cmd->add_option("--mode", search.mode, "fusion mode")
        ->check(CLI::IsMember({"usf", "sssf"}));
    search_cmd->add_option("--constraints", search.constraints, "constraint file (sssf)")
        ->check(CLI::ExistingFile);
    search_cmd->add_option("--T", search.T, "iteration budget per run");
    search_cmd->add_option("--jobs", search.jobs, "parallel workers");
    search_cmd->add_option("--seed", search.seed, "master seed");
    search_cmd->add_option("--lambda", search.lambda, "l1 weight")->check(lambda_or_auto);
    search_cmd->add_option("--penalty", search.penalty, "ADMM penalty parameter");
    search_cmd->add_flag("--zscore", search.zscore, "z-score each band first");
    search_cmd->add_option("--out", search.out, "grid CSV to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);  // --help and friends
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth_cmd->parsed()) return run_synth(synth);
        if (seg_cmd->parsed()) return run_segment(seg);
        if (con_cmd->parsed()) return run_constraints(con);
        if (fuse_cmd->parsed()) {
            if (fuse.mode != "sssf" && !fuse.constraints.empty()) {
                std::cerr << "fuse: --constraints requires --mode sssf\n";
                return 2;
            }
            if (fuse.mode != "sssf" && !fuse.weights_arg.empty()) {
                std::cerr << "fuse: --weights requires --mode sssf\n";
                return 2;
            }
            if (!fuse.weights_arg.empty()) {
                try {
                    fuse.fixed_weights = weights_from_arg(fuse.weights_arg);
                } catch (const std::exception& ex) {
                    std::cerr << "fuse: --weights: " << ex.what() << "\n";
                    return 2;
                }
            }
            return run_fuse(fuse);
        }
        if (eval_cmd->parsed()) return run_evaluate(eval);
        if (search_cmd->parsed()) return run_param_search(search);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 2;  // unreachable: require_subcommand guarantees one verb parsed
}
