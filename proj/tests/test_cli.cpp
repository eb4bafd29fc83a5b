#include <doctest.h>

#include "cli_commands.hpp"

#include "tellipsoid/ranking.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

// Runs the CLI in-process with cout/cerr captured so test output stays clean
// and assertions can look at what the tool printed.
int run(const std::vector<std::string>& args, std::string* out = nullptr,
        std::string* err = nullptr) {
    std::vector<std::string> argv;
    argv.reserve(args.size() + 1);
    argv.emplace_back("tellipsoid");
    argv.insert(argv.end(), args.begin(), args.end());

    std::ostringstream captured_out;
    std::ostringstream captured_err;
    std::streambuf* old_out = std::cout.rdbuf(captured_out.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(captured_err.rdbuf());
    int code = -1;
    try {
        code = tellipsoid::cli::run_cli(argv);
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    if (out) *out = captured_out.str();
    if (err) *err = captured_err.str();
    return code;
}

struct TmpDir {
    std::filesystem::path dir;

    explicit TmpDir(const std::string& name)
        : dir(std::filesystem::current_path() / name) {
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir);
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
    }
    std::string path(const std::string& file) const { return (dir / file).string(); }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Small gaussian dataset: m=40, blocks of 4 at rho=0.5, 4 up / 4 down spikes,
// 8 + 8 samples. With P=50 this gives c=20 and 20 rank-eligible genes.
std::vector<std::string> gaussian_simulate_args(const std::string& prefix,
                                                const std::string& seed) {
    return {"simulate",    "--mode", "gaussian", "--m",    "40",   "--blocksize", "4",
            "--rho",       "0.5",    "--mu",     "4",      "--md", "4",           "--xu",
            "1.5",         "--xd=-1.5", "--n1",  "8",      "--n2", "8",           "--seed",
            seed,          "--out-prefix", prefix};
}

void write_tiny_matrix_with_zero(const std::string& path) {
    std::ofstream out(path);
    out << "gene_id\ts1\ts2\ts3\ts4\n";
    out << "g1\t1\t2\t3\t4\n";
    out << "g2\t5\t6\t7\t8\n";
    out << "g3\t0\t2\t2\t2\n"; // zero entry: not log10-transformable
    out << "g4\t9\t9.5\t10\t10.5\n";
}

void write_tiny_labels(const std::string& path) {
    std::ofstream out(path);
    out << "s1\t1\ns2\t1\ns3\t2\ns4\t2\n";
}

} // namespace

TEST_CASE("cli: help requests exit 0") {
    std::string out;
    CHECK(run({"--help"}, &out) == 0);
    CHECK(out.find("rank") != std::string::npos);
    CHECK(out.find("simulate") != std::string::npos);

    out.clear();
    CHECK(run({"rank", "--help"}, &out) == 0);
    CHECK(out.find("--input") != std::string::npos);
}

TEST_CASE("cli: parse failures exit 1") {
    std::string err;

    // Missing required flags.
    CHECK(run({"rank", "--input", "x.tsv"}, nullptr, &err) == 1);
    // Unknown subcommand.
    CHECK(run({"frobnicate"}, nullptr, &err) == 1);
    // Value rejected by an enum check.
    CHECK(run({"rank", "--input", "x.tsv", "--labels", "y.tsv", "--R", "5", "--solver",
               "quantum"},
              nullptr, &err) == 1);
    // No subcommand at all.
    CHECK(run({}, nullptr, &err) == 1);
}

TEST_CASE("cli: missing input file exits 2") {
    TmpDir tmp("cli_tmp_io");
    std::string err;
    const int code = run({"rank", "--input", tmp.path("missing.tsv"), "--labels",
                          tmp.path("missing_labels.tsv"), "--R", "5"},
                         nullptr, &err);
    CHECK(code == 2);
    CHECK(err.find("cannot open") != std::string::npos);
}

TEST_CASE("cli: unwritable output path exits 2") {
    TmpDir tmp("cli_tmp_out");
    write_tiny_matrix_with_zero(tmp.path("base.tsv"));
    write_tiny_labels(tmp.path("labels.tsv"));
    const int code = run({"rank", "--input", tmp.path("base.tsv"), "--labels",
                          tmp.path("labels.tsv"), "--R", "2", "--output",
                          tmp.path("no_such_dir/out.tsv")});
    CHECK(code == 2);
}

TEST_CASE("cli: simulate writes three deterministic files") {
    TmpDir tmp("cli_tmp_sim");
    std::string out;
    CHECK(run(gaussian_simulate_args(tmp.path("a"), "101"), &out) == 0);

    // stdout lists the three artifact paths.
    CHECK(out.find("a.data.tsv") != std::string::npos);
    CHECK(out.find("a.labels.tsv") != std::string::npos);
    CHECK(out.find("a.truth.tsv") != std::string::npos);

    const std::string data = read_file(tmp.path("a.data.tsv"));
    const std::string labels = read_file(tmp.path("a.labels.tsv"));
    const std::string truth = read_file(tmp.path("a.truth.tsv"));
    CHECK(data.find("gene_id\t") == 0);
    CHECK(labels.find("sample_id\tgroup") != std::string::npos);
    CHECK(truth.find("# mode=gaussian") != std::string::npos);
    CHECK(truth.find("# seed=101") != std::string::npos);
    CHECK(truth.find("gene_id\tdirection") != std::string::npos);

    // Same seed, second run: byte-identical artifacts.
    CHECK(run(gaussian_simulate_args(tmp.path("b"), "101")) == 0);
    CHECK(read_file(tmp.path("b.data.tsv")) == data);
    CHECK(read_file(tmp.path("b.labels.tsv")) == labels);
    CHECK(read_file(tmp.path("b.truth.tsv")) == truth);

    // Different seed: different data.
    CHECK(run(gaussian_simulate_args(tmp.path("c"), "102")) == 0);
    CHECK(read_file(tmp.path("c.data.tsv")) != data);
}

TEST_CASE("cli: simulate standardize mode round trip") {
    TmpDir tmp("cli_tmp_std");
    // A base matrix without constant-in-group rows (labels are assigned by the
    // generator, so every row must simply be non-constant on any split).
    std::ofstream base(tmp.path("base.tsv"));
    base << "gene_id\ts1\ts2\ts3\ts4\ts5\ts6\n";
    base << "g1\t1\t5\t2\t8\t3\t9\n";
    base << "g2\t4\t1\t6\t2\t7\t3\n";
    base << "g3\t10\t2\t9\t4\t8\t6\n";
    base << "g4\t0.5\t3.5\t1.5\t4.5\t2.5\t5.5\n";
    base << "g5\t7\t1\t8\t2\t9\t4\n";
    base.close();

    const std::vector<std::string> args = {
        "simulate", "--mode", "standardize", "--input", tmp.path("base.tsv"),
        "--mu", "1", "--md", "1", "--xu", "2.0", "--xd=-2.0",
        "--n1", "3", "--n2", "3", "--seed", "33", "--out-prefix", tmp.path("s")};
    CHECK(run(args) == 0);
    const std::string truth = read_file(tmp.path("s.truth.tsv"));
    CHECK(truth.find("# mode=standardize") != std::string::npos);
    CHECK(truth.find("# base=") != std::string::npos);

    // Group sizes must cover the base matrix exactly.
    std::vector<std::string> bad = args;
    bad[15] = "2";           // --n2 2, so n1 + n2 = 5 != 6
    bad[19] = tmp.path("t"); // fresh out-prefix
    std::string err;
    CHECK(run(bad, nullptr, &err) == 1);
}

TEST_CASE("cli: rank end to end on simulated data") {
    TmpDir tmp("cli_tmp_rank");
    REQUIRE(run(gaussian_simulate_args(tmp.path("d"), "2024")) == 0);
    const std::string data = tmp.path("d.data.tsv");
    const std::string labels = tmp.path("d.labels.tsv");

    SUBCASE("tellipsoid list with auto solver") {
        CHECK(run({"rank", "--input", data, "--labels", labels, "--R", "12", "--output",
                   tmp.path("tell.tsv")}) == 0);
        const tellipsoid::RankedGeneList list =
            tellipsoid::load_ranked_list(tmp.path("tell.tsv"));
        CHECK(list.rows.size() == 12);
        // n=16 < c=20, so the auto rule picks the factored solver.
        CHECK(list.meta.method == "lowrank-woodbury");
        REQUIRE(list.meta.c.has_value());
        CHECK(*list.meta.c == 20);
        for (std::size_t i = 0; i < list.rows.size(); ++i) {
            CHECK(list.rows[i].rank == static_cast<int>(i) + 1);
            CHECK(list.rows[i].u_star.has_value());
        }
    }

    SUBCASE("list is truncated to the rank-eligible genes") {
        // m=40, c=20: asking for 30 yields the 20 eligible genes.
        CHECK(run({"rank", "--input", data, "--labels", labels, "--R", "30", "--output",
                   tmp.path("long.tsv")}) == 0);
        const tellipsoid::RankedGeneList list =
            tellipsoid::load_ranked_list(tmp.path("long.tsv"));
        CHECK(list.rows.size() == 20);
    }

    SUBCASE("dense and lowrank solvers produce the same list") {
        CHECK(run({"rank", "--input", data, "--labels", labels, "--R", "12", "--solver",
                   "dense", "--output", tmp.path("dense.tsv")}) == 0);
        CHECK(run({"rank", "--input", data, "--labels", labels, "--R", "12", "--solver",
                   "lowrank", "--output", tmp.path("low.tsv")}) == 0);
        const tellipsoid::RankedGeneList a =
            tellipsoid::load_ranked_list(tmp.path("dense.tsv"));
        const tellipsoid::RankedGeneList b =
            tellipsoid::load_ranked_list(tmp.path("low.tsv"));
        CHECK(a.meta.method == "dense-cholesky");
        CHECK(b.meta.method == "lowrank-woodbury");
        REQUIRE(a.rows.size() == b.rows.size());
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            CHECK(a.rows[i].gene_id == b.rows[i].gene_id);
            REQUIRE(a.rows[i].u_star.has_value());
            REQUIRE(b.rows[i].u_star.has_value());
            CHECK(*a.rows[i].u_star ==
                  doctest::Approx(*b.rows[i].u_star).epsilon(1e-4));
        }
    }

    SUBCASE("raw statistic baseline") {
        CHECK(run({"rank", "--input", data, "--labels", labels, "--R", "12", "--stat",
                   "raw", "--output", tmp.path("raw.tsv")}) == 0);
        const tellipsoid::RankedGeneList list =
            tellipsoid::load_ranked_list(tmp.path("raw.tsv"));
        CHECK(list.meta.method == "raw_t");
        CHECK(list.rows.size() == 12);
        for (std::size_t i = 0; i < list.rows.size(); ++i) {
            CHECK_FALSE(list.rows[i].u_star.has_value());
            CHECK(list.rows[i].t_rank == list.rows[i].rank);
        }
    }

    SUBCASE("validation failures exit 1") {
        CHECK(run({"rank", "--input", data, "--labels", labels, "--R", "12", "--P",
                   "120"}) == 1);
        CHECK(run({"rank", "--input", data, "--labels", labels, "--R", "0"}) == 1);
        CHECK(run({"rank", "--input", data, "--labels", labels, "--R", "1000"}) == 1);
        CHECK(run({"rank", "--input", data, "--labels", labels, "--R", "12", "--delta",
                   "0"}) == 1);
    }

    SUBCASE("log10 transform failure names the offending value") {
        write_tiny_matrix_with_zero(tmp.path("zero.tsv"));
        write_tiny_labels(tmp.path("zero_labels.tsv"));
        std::string err;
        CHECK(run({"rank", "--input", tmp.path("zero.tsv"), "--labels",
                   tmp.path("zero_labels.tsv"), "--R", "2", "--log10"},
                  nullptr, &err) == 1);
        CHECK(err.find("g3") != std::string::npos);
    }

    SUBCASE("global --threads flag is accepted") {
        CHECK(run({"--threads", "1", "rank", "--input", data, "--labels", labels, "--R",
                   "5", "--output", tmp.path("t1.tsv")}) == 0);
    }
}

TEST_CASE("cli: evaluate scores lists against truth") {
    TmpDir tmp("cli_tmp_eval");
    REQUIRE(run(gaussian_simulate_args(tmp.path("e"), "777")) == 0);
    const std::string data = tmp.path("e.data.tsv");
    const std::string labels = tmp.path("e.labels.tsv");
    const std::string truth = tmp.path("e.truth.tsv");
    REQUIRE(run({"rank", "--input", data, "--labels", labels, "--R", "10", "--output",
                 tmp.path("tell.tsv")}) == 0);
    REQUIRE(run({"rank", "--input", data, "--labels", labels, "--R", "10", "--stat",
                 "raw", "--output", tmp.path("raw.tsv")}) == 0);

    SUBCASE("report rows carry method, R, and a bounded FDR") {
        CHECK(run({"evaluate", "--list", tmp.path("tell.tsv"), "--list",
                   tmp.path("raw.tsv"), "--truth", truth, "--output",
                   tmp.path("report.tsv")}) == 0);
        const std::string report = read_file(tmp.path("report.tsv"));
        CHECK(report.find("replicate\tmethod\tR\tNoFP\tFDR") == 0);
        CHECK(report.find("\ttellipsoid\t10\t") != std::string::npos);
        CHECK(report.find("\traw_t\t10\t") != std::string::npos);
        // Two data rows after the header.
        std::istringstream in(report);
        std::string line;
        int rows = 0;
        while (std::getline(in, line)) ++rows;
        CHECK(rows == 3);
    }

    SUBCASE("comparison table requires one list per method") {
        CHECK(run({"evaluate", "--list", tmp.path("tell.tsv"), "--list",
                   tmp.path("raw.tsv"), "--truth", truth, "--output",
                   tmp.path("r.tsv"), "--table", tmp.path("table.tsv")}) == 0);
        const std::string table = read_file(tmp.path("table.tsv"));
        CHECK(table.find("u_rank\t") == 0);
        CHECK(table.find("# tellipsoid: R=10") != std::string::npos);
        CHECK(table.find("# raw_t: R=10") != std::string::npos);

        // One list: not a comparison.
        CHECK(run({"evaluate", "--list", tmp.path("tell.tsv"), "--truth", truth,
                   "--output", tmp.path("r1.tsv"), "--table",
                   tmp.path("t1.tsv")}) == 1);
        // Two lists of the same method: rejected.
        CHECK(run({"evaluate", "--list", tmp.path("tell.tsv"), "--list",
                   tmp.path("tell.tsv"), "--truth", truth, "--output",
                   tmp.path("r2.tsv"), "--table", tmp.path("t2.tsv")}) == 1);
    }

    SUBCASE("evaluate without truth or lists exits 1") {
        CHECK(run({"evaluate", "--list", tmp.path("tell.tsv")}) == 1);
        CHECK(run({"evaluate", "--truth", truth}) == 1);
    }
}

TEST_CASE("cli: evaluate study mode") {
    TmpDir tmp("cli_tmp_study");
    const std::vector<std::string> base = {
        "evaluate", "--study", "--mode", "gaussian", "--m", "30", "--blocksize", "5",
        "--rho", "0.4", "--mu", "3", "--md", "3", "--xu", "1.0", "--xd=-1.0",
        "--n1", "6", "--n2", "6", "--replicates", "3", "--R", "6", "--R", "10",
        "--methods", "tellipsoid,raw_t", "--seed", "91"};

    auto with_output = [&base](const std::string& prefix) {
        std::vector<std::string> args = base;
        args.push_back("--output");
        args.push_back(prefix);
        return args;
    };

    SUBCASE("writes series and summary files with the expected shape") {
        CHECK(run(with_output(tmp.path("study"))) == 0);
        const std::string series = read_file(tmp.path("study.study.tsv"));
        const std::string summary = read_file(tmp.path("study.summary.tsv"));

        std::istringstream sin(series);
        std::string line;
        int rows = -1; // do not count the header
        while (std::getline(sin, line)) ++rows;
        CHECK(rows == 3 * 2 * 2); // replicates x methods x list sizes

        CHECK(summary.find("method\tR\tmedian_FDR\tfrac_zero_FDR") == 0);
        std::istringstream min(summary);
        int srows = -1;
        while (std::getline(min, line)) ++srows;
        CHECK(srows == 2 * 2);

        // Determinism: the same seed reproduces both files byte for byte.
        CHECK(run(with_output(tmp.path("again"))) == 0);
        CHECK(read_file(tmp.path("again.study.tsv")) == series);
        CHECK(read_file(tmp.path("again.summary.tsv")) == summary);
    }

    SUBCASE("study validation failures exit 1") {
        // R larger than the rank-eligible set (m=30, c=15) but within [1, m],
        // so the study-level check is what rejects it.
        std::vector<std::string> big_r = with_output(tmp.path("x"));
        REQUIRE(big_r[23] == "--R");
        big_r[24] = "20";
        std::string err;
        CHECK(run(big_r, nullptr, &err) == 1);
        CHECK(err.find("lower R or P") != std::string::npos);

        // Unknown method name.
        std::vector<std::string> bad_method = with_output(tmp.path("y"));
        REQUIRE(bad_method[27] == "--methods");
        bad_method[28] = "sam";
        CHECK(run(bad_method, nullptr, &err) == 1);

        // Missing --output.
        CHECK(run(base) == 1);

        // Missing --seed.
        std::vector<std::string> no_seed = with_output(tmp.path("z"));
        REQUIRE(no_seed[29] == "--seed");
        no_seed.erase(no_seed.begin() + 29, no_seed.begin() + 31);
        CHECK(run(no_seed) == 1);
    }
}

TEST_CASE("cli: covlab checks the covariance formulas") {
    std::string out;

    SUBCASE("observation 1 within default tolerance") {
        const int code = run({"covlab", "--obs", "1", "--rho", "0.5", "--n1", "25",
                              "--n2", "25", "--reps", "20000", "--seed", "7"},
                             &out);
        CHECK(code == 0);
        CHECK(out.find("obs 1:") != std::string::npos);
        CHECK(out.find("theoretical=0.521739") != std::string::npos);
    }

    SUBCASE("observation 3 with distinct group correlations") {
        CHECK(run({"covlab", "--obs", "3", "--rho1", "0.8", "--rho2", "0.2", "--n1",
                   "25", "--n2", "25", "--reps", "20000", "--seed", "5"},
                  &out) == 0);
        CHECK(out.find("obs 3:") != std::string::npos);
    }

    SUBCASE("an unreachable tolerance exits 3") {
        CHECK(run({"covlab", "--obs", "1", "--rho", "0.5", "--n1", "25", "--n2", "25",
                   "--reps", "20000", "--seed", "7", "--tol", "0.00001"},
                  &out) == 3);
    }

    SUBCASE("flag routing and validation") {
        // obs 1 needs --rho, not --rho1/--rho2.
        CHECK(run({"covlab", "--obs", "1", "--rho1", "0.5", "--n1", "25", "--n2", "25",
                   "--seed", "7"}) == 1);
        // obs 2 needs both group correlations.
        CHECK(run({"covlab", "--obs", "2", "--rho1", "0.5", "--n1", "25", "--n2", "25",
                   "--seed", "7"}) == 1);
        // Correlation outside [0, 1).
        CHECK(run({"covlab", "--obs", "1", "--rho", "1.5", "--n1", "25", "--n2", "25",
                   "--reps", "1000", "--seed", "7"}) == 1);
    }
}
