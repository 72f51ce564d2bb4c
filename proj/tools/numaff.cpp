// numaff: preprocess, train, simmatrix, cluster, render, synth.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "numaff/checkpoint.hpp"
#include "numaff/clustering.hpp"
#include "numaff/config.hpp"
#include "numaff/error.hpp"
#include "numaff/image.hpp"
#include "numaff/ingest.hpp"
#include "numaff/preprocess.hpp"
#include "numaff/render.hpp"
#include "numaff/simmatrix.hpp"
#include "numaff/training.hpp"

namespace fs = std::filesystem;
using namespace numaff;

namespace {

enum Exit : int {
    ok = 0,
    item_failures = 1,
    usage = 2,
    io_error = 3,
    format_error = 4,
    data_error = 5,
    training_diverged = 6,
};

int exit_code(Errc c) {
    switch (c) {
    case Errc::io:
    case Errc::unreadable_file: return io_error;
    case Errc::decode:
    case Errc::bad_magic:
    case Errc::bad_version:
    case Errc::truncated:
    case Errc::ragged_rows:
    case Errc::non_numeric: return format_error;
    case Errc::divergence: return training_diverged;
    case Errc::invalid_argument: return usage;
    default: return data_error;
    }
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t parse_seed(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used, 0);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string(what) + " '" + s + "' is not an unsigned 64-bit integer");
    }
}

Dataset open_dataset(const fs::path& root, std::size_t size) {
    return load_dataset(scan_dataset(root, dataset_name_from_root(root)), size);
}

bool is_pnm(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

// --- preprocess ---------------------------------------------------------------

struct PreprocessArgs {
    std::string in, out;
    std::size_t size = kCanonicalSize;
};

int run_preprocess(const PreprocessArgs& a) {
    const fs::path in = a.in, out = a.out;
    if (!fs::is_directory(in)) throw Error(Errc::io, "input root is not a readable directory: " + a.in);
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(in))
        if (e.is_regular_file() && is_pnm(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    fs::create_directories(out);

    std::size_t failed = 0;
    for (const auto& f : files) {
        fs::path dst = out / fs::relative(f, in);
        dst.replace_extension(".pgm");
        try {
            write_pgm(dst, to_gray(preprocess_file(f, a.size)));
        } catch (const Error& e) {
            ++failed;
            std::fprintf(stderr, "skip\t%s\t%s\t%s\n", f.string().c_str(), errc_name(e.code()), e.what());
        }
    }
    std::fprintf(stderr, "preprocess\tfiles=%zu\tfailed=%zu\n", files.size(), failed);
    return failed ? item_failures : ok;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
    std::string data, config, out, trace;
    std::optional<std::string> preset, precision, seed, window;
    std::optional<std::size_t> epochs, batch, pairs;
    std::optional<double> lr;
};

int run_train(const TrainArgs& a) {
    RunConfig cfg;
    if (!a.config.empty()) cfg = load_config(a.config);
    if (a.preset) apply_setting(cfg, "preset", *a.preset);
    if (a.precision) apply_setting(cfg, "precision", *a.precision);
    if (a.seed) apply_setting(cfg, "seed", *a.seed);
    if (a.window) apply_setting(cfg, "target_accuracy_window", *a.window);
    if (a.epochs) cfg.train.epochs_max = *a.epochs;
    if (a.batch) cfg.train.batch_size = *a.batch;
    if (a.pairs) cfg.train.pairs_per_epoch = *a.pairs;
    if (a.lr) cfg.train.lr = *a.lr;
    validate_train_config(cfg.train);

    const auto& arch = architecture(cfg.preset);
    const Dataset ds = open_dataset(a.data, arch.input_size);
    const TrainResult r = train(init_model(cfg.preset, cfg.train.seed), ds, cfg.train);
    for (const auto& e : r.trace)
        std::fprintf(stderr, "epoch\t%zu\tloss=%.9g\tholdout_loss=%.9g\tholdout_accuracy=%.9g\n", e.epoch, e.loss,
                     e.holdout_loss, e.holdout_accuracy);

    TrainingMeta meta;
    meta.epochs_run = static_cast<std::uint32_t>(r.trace.size());
    meta.final_loss = r.trace.empty() ? std::nanf("") : static_cast<float>(r.trace.back().loss);
    save_checkpoint(r.model, meta, a.out);
    const fs::path trace = a.trace.empty() ? fs::path(a.out + ".loss.csv") : fs::path(a.trace);
    write_file(trace, trace_csv(r.trace));
    std::printf("%s\n%s\n", a.out.c_str(), trace.string().c_str());
    return ok;
}

// --- simmatrix ---------------------------------------------------------------

struct SimmatrixArgs {
    std::string model, out, config;
    std::vector<std::string> datasets;
    std::optional<std::size_t> n;
    std::optional<std::string> seed;
    std::optional<double> stub;
    std::size_t jobs = 1;
    std::size_t size = kCanonicalSize;
};

int run_simmatrix(const SimmatrixArgs& a) {
    if (a.datasets.size() < 2) throw UsageError("simmatrix needs at least 2 --datasets");
    if (a.model.empty() == !a.stub) throw UsageError("give exactly one of --model or --stub-constant");
    if (a.jobs == 0) throw UsageError("--jobs must be at least 1");

    RunConfig cfg;
    if (!a.config.empty()) cfg = load_config(a.config);
    if (a.n) cfg.sampling.samples_per_digit = *a.n;
    if (a.seed) {
        cfg.sampling.master_seed = parse_seed(*a.seed, "--seed");
    } else if (const char* env = std::getenv("NUMAFF_SEED"); env && *env) {
        cfg.sampling.master_seed = parse_seed(env, "NUMAFF_SEED");
    }
    if (cfg.sampling.samples_per_digit == 0) throw UsageError("--N must be at least 1");

    std::unique_ptr<PairScorer> scorer;
    std::size_t size = a.size;
    if (a.stub) {
        scorer = std::make_unique<ConstantScorer>(*a.stub);
    } else {
        auto ck = load_checkpoint(a.model);
        size = ck.model.arch().input_size;
        scorer = std::make_unique<SiameseScorer>(std::move(ck.model));
    }

    std::vector<Dataset> datasets;
    for (const auto& root : a.datasets) datasets.push_back(open_dataset(root, size));

    const std::size_t total = datasets.size() * (datasets.size() - 1) / 2;
    std::size_t done = 0;
    const auto progress = [&](const PairProgress& p) {
        ++done;
        std::fprintf(stderr, "pair\t%zu/%zu\t%s\t%s\t%.9g\n", done, total, p.name_a.c_str(), p.name_b.c_str(),
                     p.score);
    };
    const SimilarityMatrix m = similarity_matrix(*scorer, datasets, cfg.sampling, a.jobs, progress);
    write_matrix_csv(m, a.out);
    return ok;
}

// --- cluster -----------------------------------------------------------------

struct ClusterArgs {
    std::string matrix, out, json;
};

int run_cluster(const ClusterArgs& a) {
    const Dendrogram tree = upgma_cluster(read_matrix_csv(a.matrix));
    const std::string newick = to_newick(tree) + "\n";
    if (!a.out.empty()) write_file(a.out, newick);
    if (!a.json.empty()) write_file(a.json, dendrogram_json(tree));
    if (a.out.empty() && a.json.empty()) std::fputs(newick.c_str(), stdout);
    return ok;
}

// --- render ------------------------------------------------------------------

struct RenderArgs {
    std::string matrix, tree, heatmap, dendro;
    bool ascii = false;
};

int run_render(const RenderArgs& a) {
    const SimilarityMatrix m = read_matrix_csv(a.matrix);
    Dendrogram tree;
    if (a.tree.empty()) {
        tree = upgma_cluster(m);
    } else {
        const std::string text = read_file(a.tree);
        try {
            tree = parse_dendrogram_json(text);
        } catch (const Error& e) {
            throw Error(e.code(), a.tree + ": " + e.what());
        }
    }
    require_consistent(m, tree);
    if (!a.heatmap.empty()) write_file(a.heatmap, heatmap_svg(m, tree));
    if (!a.dendro.empty()) write_file(a.dendro, dendrogram_svg(tree));
    if (a.ascii) std::fputs(dendrogram_ascii(tree).c_str(), stdout);
    return ok;
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
    std::string out, name;
    SynthSpec spec;
};

int run_synth(SynthArgs a) {
    a.spec.family_id = a.name.empty() ? dataset_name_from_root(a.out) : a.name;
    validate_synth_spec(a.spec);
    const auto manifest = generate_synthetic_family(a.spec, a.out);
    std::fputs(manifest_json(manifest).c_str(), stdout);
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-script handwritten digit dataset similarity pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "numaff 1.0");

    PreprocessArgs pre;
    auto* cmd_pre = app.add_subcommand("preprocess", "Canonicalize every PGM/PPM under a tree");
    cmd_pre->add_option("--in", pre.in, "Input root")->required();
    cmd_pre->add_option("--out", pre.out, "Output root (mirrors the input tree)")->required();
    cmd_pre->add_option("--size", pre.size, "Output side length")->check(CLI::PositiveNumber);

    TrainArgs tr;
    auto* cmd_train = app.add_subcommand("train", "Train the twin network on one dataset");
    cmd_train->add_option("--data", tr.data, "Dataset root with 0..9 class folders")->required();
    cmd_train->add_option("--config", tr.config, "key = value settings file");
    cmd_train->add_option("--out", tr.out, "Checkpoint path")->required();
    cmd_train->add_option("--trace", tr.trace, "Loss trace CSV (default <out>.loss.csv)");
    cmd_train->add_option("--preset", tr.preset, "full | small");
    cmd_train->add_option("--precision", tr.precision, "f32 | f64");
    cmd_train->add_option("--seed", tr.seed, "Init and sampling seed");
    cmd_train->add_option("--window", tr.window, "Target held-out accuracy window lo,hi");
    cmd_train->add_option("--epochs", tr.epochs, "epochs_max");
    cmd_train->add_option("--batch-size", tr.batch, "Pairs per minibatch");
    cmd_train->add_option("--pairs-per-epoch", tr.pairs, "Training pairs per epoch");
    cmd_train->add_option("--lr", tr.lr, "Adam learning rate");

    SimmatrixArgs sm;
    auto* cmd_sm = app.add_subcommand("simmatrix", "Pairwise dataset similarity matrix");
    cmd_sm->add_option("--model", sm.model, "Checkpoint");
    cmd_sm->add_option("--datasets", sm.datasets, "Dataset roots")->required();
    cmd_sm->add_option("--N", sm.n, "Tuples sampled per digit");
    cmd_sm->add_option("--seed", sm.seed, "Master seed (falls back to NUMAFF_SEED)");
    cmd_sm->add_option("--config", sm.config, "key = value settings file");
    cmd_sm->add_option("--jobs", sm.jobs, "Worker threads");
    cmd_sm->add_option("--out", sm.out, "Matrix CSV")->required();
    cmd_sm->add_option("--stub-constant", sm.stub, "Score every pair with this constant instead of a model");
    cmd_sm->add_option("--size", sm.size, "Image size when using --stub-constant")->check(CLI::PositiveNumber);

    ClusterArgs cl;
    auto* cmd_cl = app.add_subcommand("cluster", "UPGMA dendrogram from a matrix");
    cmd_cl->add_option("--matrix", cl.matrix, "Matrix CSV")->required();
    cmd_cl->add_option("--out", cl.out, "Newick output");
    cmd_cl->add_option("--json", cl.json, "JSON merge list output");

    RenderArgs rd;
    auto* cmd_rd = app.add_subcommand("render", "Heatmap and dendrogram figures");
    cmd_rd->add_option("--matrix", rd.matrix, "Matrix CSV")->required();
    cmd_rd->add_option("--tree", rd.tree, "Dendrogram JSON (clustered from the matrix if omitted)");
    cmd_rd->add_option("--heatmap", rd.heatmap, "Heatmap SVG output");
    cmd_rd->add_option("--dendro", rd.dendro, "Dendrogram SVG output");
    cmd_rd->add_flag("--ascii", rd.ascii, "Print a text dendrogram to stdout");

    SynthArgs sy;
    auto* cmd_sy = app.add_subcommand("synth", "Generate a synthetic digit dataset");
    cmd_sy->add_option("--out", sy.out, "Dataset root")->required();
    cmd_sy->add_option("--name", sy.name, "Dataset name (default: root folder name)");
    cmd_sy->add_option("--glyph-set", sy.spec.glyph_set, "Base glyph set id");
    cmd_sy->add_option("--seed", sy.spec.seed, "Deformation seed");
    cmd_sy->add_option("--per-class", sy.spec.per_class, "Images per digit");
    cmd_sy->add_option("--rotation", sy.spec.rotation_deg, "Max rotation in degrees");
    cmd_sy->add_option("--shear", sy.spec.shear, "Max horizontal shear");
    cmd_sy->add_option("--jitter", sy.spec.jitter_px, "Max translation in pixels");
    cmd_sy->add_option("--thickness-delta", sy.spec.thickness_delta, "Max stroke width change");
    cmd_sy->add_option("--thickness", sy.spec.base_thickness, "Base stroke width");
    cmd_sy->add_option("--size", sy.spec.image_size, "Image side length");
    cmd_sy->add_flag("--white-on-black", sy.spec.white_on_black, "Light strokes on dark background");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        if (*cmd_pre) return run_preprocess(pre);
        if (*cmd_train) return run_train(tr);
        if (*cmd_sm) return run_simmatrix(sm);
        if (*cmd_cl) return run_cluster(cl);
        if (*cmd_rd) return run_render(rd);
        if (*cmd_sy) return run_synth(sy);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error\tusage\t%s\n", e.what());
        return usage;
    } catch (const Error& e) {
        std::fprintf(stderr, "error\t%s\t%s\n", errc_name(e.code()), e.what());
        return exit_code(e.code());
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error\tio\t%s\n", e.what());
        return io_error;
    }
    return usage;
}
