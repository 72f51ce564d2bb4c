#include <sys/wait.h>

#include <cstdlib>

#include "doctest.h"
#include "support.hpp"

#include "numaff/error.hpp"
#include "numaff/checkpoint.hpp"
#include "numaff/ingest.hpp"
#include "numaff/simmatrix.hpp"

using namespace numaff;
namespace fs = std::filesystem;

namespace {

std::string quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'') q += "'\\''";
        else q += c;
    }
    return q + "'";
}

struct RunResult {
    int code;
    std::string out;
    std::string err;
};

RunResult run(const std::string& args, const testsupport::TempDir& dir, const std::string& env = "") {
    const fs::path out = dir / ".stdout", err = dir / ".stderr";
    const std::string cmd = env + " " + quote(NUMAFF_CLI) + " " + args + " >" + quote(out.string()) + " 2>" +
                            quote(err.string());
    const int status = std::system(cmd.c_str());
    RunResult r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
    return r;
}

void synth(const fs::path& root, std::uint32_t set, std::uint64_t seed, std::size_t per_class = 2) {
    SynthSpec s;
    s.family_id = root.filename().string();
    s.glyph_set = set;
    s.seed = seed;
    s.per_class = per_class;
    s.rotation_deg = 8;
    s.jitter_px = 1;
    generate_synthetic_family(s, root);
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors") {
    testsupport::TempDir dir("cliu");
    CHECK(run("", dir).code == 2);
    CHECK(run("frobnicate", dir).code == 2);
    CHECK(run("cluster", dir).code == 2);
    CHECK(run("--help", dir).code == 0);
}

TEST_CASE("preprocess empty tree") {
    testsupport::TempDir dir("clipe");
    fs::create_directories(dir / "in");
    const auto r = run("preprocess --in " + quote((dir / "in").string()) + " --out " + quote((dir / "out").string()), dir);
    CHECK(r.code == 0);
    CHECK(fs::is_directory(dir / "out"));
    CHECK(fs::is_empty(dir / "out"));
}

TEST_CASE("preprocess fixture matches the golden and logs corrupt files") {
    testsupport::TempDir dir("clipf");
    const fs::path data(NUMAFF_TEST_DATA);
    fs::create_directories(dir / "in/7");
    fs::copy_file(data / "digit_input.pgm", dir / "in/7/a.pgm");
    auto r = run("preprocess --in " + quote((dir / "in").string()) + " --out " + quote((dir / "out").string()), dir);
    CHECK(r.code == 0);
    CHECK(read_file(dir / "out/7/a.pgm") == read_file(data / "digit_golden.pgm"));

    write_file(dir / "in/7/b.pgm", "P5 garbage");
    r = run("preprocess --in " + quote((dir / "in").string()) + " --out " + quote((dir / "out2").string()), dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("b.pgm") != std::string::npos);
    CHECK(fs::exists(dir / "out2/7/a.pgm"));
    CHECK_FALSE(fs::exists(dir / "out2/7/b.pgm"));

    r = run("preprocess --in " + quote((dir / "missing").string()) + " --out " + quote((dir / "o3").string()), dir);
    CHECK(r.code == 3);
}

TEST_CASE("train with zero epochs writes the initial model") {
    testsupport::TempDir dir("clit0");
    synth(dir / "ds", 0, 1);
    write_file(dir / "cfg.txt", "preset = small\nepochs_max = 0\nseed = 21\n");
    const auto r = run("train --data " + quote((dir / "ds").string()) + " --config " + quote((dir / "cfg.txt").string()) +
                           " --out " + quote((dir / "m.siam").string()),
                       dir);
    REQUIRE(r.code == 0);
    const Checkpoint ck = load_checkpoint(dir / "m.siam");
    CHECK(ck.model == init_model(Preset::small, 21));
    CHECK(ck.meta.epochs_run == 0);
    CHECK(read_file(dir / "m.siam.loss.csv") == "epoch,loss,holdout_accuracy\n");
}

TEST_CASE("train trace rows, flag overrides and determinism") {
    testsupport::TempDir dir("clit");
    synth(dir / "ds", 0, 2);
    write_file(dir / "cfg.txt", "preset = small\nepochs_max = 9\npairs_per_epoch = 48\nbatch_size = 16\n");
    const std::string base = "train --data " + quote((dir / "ds").string()) + " --config " +
                             quote((dir / "cfg.txt").string()) + " --epochs 2 --window 0,0 --seed 4 --lr 0.001";
    const auto a = run(base + " --out " + quote((dir / "a.siam").string()) + " --trace " + quote((dir / "a.csv").string()), dir);
    const auto b = run(base + " --out " + quote((dir / "b.siam").string()) + " --trace " + quote((dir / "b.csv").string()), dir);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const std::string trace = read_file(dir / "a.csv");
    std::size_t lines = 0;
    for (char c : trace) lines += c == '\n';
    CHECK(lines == 1 + 2);
    CHECK(load_checkpoint(dir / "a.siam").meta.epochs_run == 2);
    CHECK(read_file(dir / "a.siam") == read_file(dir / "b.siam"));
    CHECK(trace == read_file(dir / "b.csv"));
}

TEST_CASE("train reports bad config with a nonzero exit") {
    testsupport::TempDir dir("clitb");
    synth(dir / "ds", 0, 2);
    write_file(dir / "cfg.txt", "mystery = 1\n");
    const auto r = run("train --data " + quote((dir / "ds").string()) + " --config " +
                           quote((dir / "cfg.txt").string()) + " --out " + quote((dir / "m.siam").string()),
                       dir);
    CHECK(r.code != 0);
    CHECK_FALSE(fs::exists(dir / "m.siam"));
}

TEST_CASE("simmatrix with a constant stub") {
    testsupport::TempDir dir("clis");
    synth(dir / "east", 0, 1, 1);
    synth(dir / "west", 1, 1, 1);
    const std::string ds = " --datasets " + quote((dir / "east").string()) + " " + quote((dir / "west").string());
    auto r = run("simmatrix --stub-constant 0.25 --size 35 --N 3 --seed 1" + ds + " --out " +
                     quote((dir / "m.csv").string()),
                 dir);
    REQUIRE(r.code == 0);
    CHECK(read_file(dir / "m.csv") == ",east,west\neast,1,0.25\nwest,0.25,1\n");
    CHECK(r.err.find("pair\t1/1\teast\twest\t0.25") != std::string::npos);

    r = run("simmatrix --stub-constant 0.25 --datasets " + quote((dir / "east").string()) + " --out " +
                quote((dir / "x.csv").string()),
            dir);
    CHECK(r.code == 2);
}

TEST_CASE("simmatrix seeds: flag, environment fallback, reproducibility") {
    testsupport::TempDir dir("cliseed");
    for (const char* n : {"a", "b", "c", "d"}) synth(dir / n, n[0] % 2, static_cast<std::uint64_t>(n[0]));
    write_file(dir / "cfg.txt", "preset = small\nepochs_max = 0\n");
    REQUIRE(run("train --data " + quote((dir / "a").string()) + " --config " + quote((dir / "cfg.txt").string()) +
                    " --out " + quote((dir / "m.siam").string()),
                dir)
                .code == 0);
    std::string ds = " --datasets";
    for (const char* n : {"a", "b", "c", "d"}) ds += " " + quote((dir / n).string());
    const std::string base = "simmatrix --model " + quote((dir / "m.siam").string()) + ds + " --N 4";
    REQUIRE(run(base + " --seed 77 --out " + quote((dir / "s1.csv").string()), dir).code == 0);
    REQUIRE(run(base + " --seed 77 --jobs 3 --out " + quote((dir / "s2.csv").string()), dir).code == 0);
    REQUIRE(run(base + " --out " + quote((dir / "s3.csv").string()), dir, "NUMAFF_SEED=77").code == 0);
    REQUIRE(run(base + " --seed 78 --out " + quote((dir / "s4.csv").string()), dir).code == 0);
    CHECK(read_file(dir / "s1.csv") == read_file(dir / "s2.csv"));
    CHECK(read_file(dir / "s1.csv") == read_file(dir / "s3.csv"));
    CHECK(read_file(dir / "s1.csv") != read_file(dir / "s4.csv"));

    // Replay through the library with the same seeds.
    SiameseScorer scorer(load_checkpoint(dir / "m.siam").model);
    std::vector<Dataset> sets;
    for (const char* n : {"a", "b", "c", "d"}) sets.push_back(load_dataset(scan_dataset(dir / n, n), 35));
    scorer.prepare(sets);
    const SimilarityMatrix file = read_matrix_csv(dir / "s1.csv");
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j) {
            Rng rng(pair_seed(77, sets[i].name, sets[j].name));
            const double v = dataset_pair_similarity(scorer, sets[i], sets[j], {4, 77}, rng);
            CHECK(std::abs(file.at(i, j) - v) <= 5e-10 * std::max(1.0, v));
        }
}

TEST_CASE("cluster and render") {
    testsupport::TempDir dir("clic");
    const fs::path data(NUMAFF_TEST_DATA);
    const std::string mat = quote((data / "matrix3.csv").string());
    auto r = run("cluster --matrix " + mat + " --out " + quote((dir / "t.nwk").string()) + " --json " +
                     quote((dir / "t.json").string()),
                 dir);
    REQUIRE(r.code == 0);
    CHECK(read_file(dir / "t.nwk") == "(C:0.7,(A:0.1,B:0.1)0.900000:0.6)0.300000;\n");
    CHECK(read_file(dir / "t.json") == read_file(data / "tree3.json"));

    r = run("render --matrix " + mat + " --tree " + quote((dir / "t.json").string()) + " --heatmap " +
                quote((dir / "h.svg").string()) + " --dendro " + quote((dir / "d.svg").string()) + " --ascii",
            dir);
    REQUIRE(r.code == 0);
    CHECK(read_file(dir / "h.svg") == read_file(data / "heat3.svg"));
    CHECK(read_file(dir / "d.svg") == read_file(data / "dendro3.svg"));
    CHECK(r.out.find("`-- [s=0.9000 h=0.1000]") != std::string::npos);

    write_file(dir / "other.json", "{\"leaves\":[\"A\",\"B\",\"Z\"],\"merges\":[{\"left\":0,\"right\":1,"
                                   "\"similarity\":0.9,\"size\":2},{\"left\":2,\"right\":3,\"similarity\":0.3,\"size\":3}]}");
    r = run("render --matrix " + mat + " --tree " + quote((dir / "other.json").string()) + " --ascii", dir);
    CHECK(r.code != 0);
    CHECK(r.err.find("name_mismatch") != std::string::npos);

    write_file(dir / "bad.csv", ",A,B\nA,1,0.5\n");
    r = run("cluster --matrix " + quote((dir / "bad.csv").string()), dir);
    CHECK(r.code == 4);
}

} // TEST_SUITE
