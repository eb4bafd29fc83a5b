#include "cli_commands.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "tellipsoid/evaluation.hpp"
#include "tellipsoid/ranking.hpp"
#include "tellipsoid/simulation.hpp"

namespace tellipsoid::cli {

namespace {

struct RankFlags {
    std::string input;
    std::string labels;
    std::string output;
    long R = 0;
    double P = 50.0;
    double delta = 1e-10;
    std::string solver = "auto";
    std::string stat = "tellipsoid";
    bool log10 = false;
};

struct SimulateFlags {
    std::string mode = "standardize";
    std::string input;
    std::string out_prefix;
    long m = 0;
    long block_size = 0;
    double rho = 0.0;
    long m_u = 0;
    long m_d = 0;
    double x_u = 0.0;
    double x_d = 0.0;
    int n1 = 0;
    int n2 = 0;
    std::uint64_t seed = 0;
    bool log10 = false;
};

struct EvaluateFlags {
    std::vector<std::string> lists;
    std::string truth;
    std::string output;
    std::string table;
    bool study = false;
    SimulateFlags gen;
    std::string methods = "tellipsoid,raw_t";
    std::vector<long> list_sizes;
    int replicates = 0;
    std::uint64_t seed = 0;
    double P = 50.0;
    double delta = 1e-10;
    std::string solver = "auto";
};

struct CovlabFlags {
    int obs = 0;
    std::optional<double> rho;
    std::optional<double> rho1;
    std::optional<double> rho2;
    int n1 = 0;
    int n2 = 0;
    long reps = 100000;
    std::uint64_t seed = 0;
    double tol = 0.03;
};

std::optional<SolveMethod> parse_solver(const std::string& solver) {
    if (solver == "auto") return std::nullopt;
    if (solver == "dense") return SolveMethod::dense_cholesky;
    if (solver == "lowrank") return SolveMethod::lowrank_woodbury;
    throw ValidationError("unknown solver '" + solver + "' (expected auto, dense, or lowrank)");
}

int cmd_rank(const RankFlags& flags) {
    const ExpressionMatrix x = load_expression_matrix(flags.input, flags.log10);
    const GroupLabels labels = load_labels(flags.labels, x.sample_ids);

    RankedGeneList list;
    if (flags.stat == "tellipsoid") {
        TellipsoidOptions opts;
        opts.P = flags.P;
        opts.delta = flags.delta;
        opts.method = parse_solver(flags.solver);
        list = run_tellipsoid(x, labels, flags.R, opts);
    } else if (flags.stat == "raw") {
        const TStatistics stats = two_sample_t(x, labels);
        list = rank_raw_t(stats, x.gene_ids, flags.R);
    } else {
        throw ValidationError("unknown statistic '" + flags.stat +
                              "' (expected tellipsoid or raw)");
    }

    if (flags.output.empty()) write_ranked_list(list, std::cout);
    else write_ranked_list(list, flags.output);
    return 0;
}

SpikeSpec spike_from_flags(const SimulateFlags& flags) {
    SpikeSpec spec;
    spec.m_u = flags.m_u;
    spec.m_d = flags.m_d;
    spec.x_u = flags.x_u;
    spec.x_d = flags.x_d;
    spec.n1 = flags.n1;
    spec.n2 = flags.n2;
    spec.seed = flags.seed;
    return spec;
}

SimulatedDataset generate_dataset(const SimulateFlags& flags, std::uint64_t seed) {
    SpikeSpec spec = spike_from_flags(flags);
    spec.seed = seed;
    if (flags.mode == "gaussian") {
        BlockCovSpec cov;
        cov.m = flags.m;
        cov.block_size = flags.block_size;
        cov.rho = flags.rho;
        return gaussian_generate(cov, flags.n1, flags.n2, spec);
    }
    if (flags.mode == "standardize") {
        if (flags.input.empty()) {
            throw ValidationError("standardize mode requires --input (base expression matrix)");
        }
        const ExpressionMatrix base = load_expression_matrix(flags.input, flags.log10);
        return standardize_generate(base, spec);
    }
    throw ValidationError("unknown mode '" + flags.mode + "' (expected standardize or gaussian)");
}

std::vector<std::string> simulate_metadata(const SimulateFlags& flags, Eigen::Index m,
                                           std::uint64_t seed) {
    char buf[64];
    std::vector<std::string> meta;
    meta.push_back("mode=" + flags.mode);
    meta.push_back("m=" + std::to_string(m));
    meta.push_back("n1=" + std::to_string(flags.n1));
    meta.push_back("n2=" + std::to_string(flags.n2));
    meta.push_back("m_u=" + std::to_string(flags.m_u));
    meta.push_back("m_d=" + std::to_string(flags.m_d));
    std::snprintf(buf, sizeof(buf), "x_u=%.17g", flags.x_u);
    meta.emplace_back(buf);
    std::snprintf(buf, sizeof(buf), "x_d=%.17g", flags.x_d);
    meta.emplace_back(buf);
    if (flags.mode == "gaussian") {
        meta.push_back("block_size=" + std::to_string(flags.block_size));
        std::snprintf(buf, sizeof(buf), "rho=%.17g", flags.rho);
        meta.emplace_back(buf);
    } else {
        meta.push_back("base=" + flags.input);
    }
    meta.push_back("seed=" + std::to_string(seed));
    return meta;
}

int cmd_simulate(const SimulateFlags& flags) {
    const SimulatedDataset ds = generate_dataset(flags, flags.seed);

    const std::string data_path = flags.out_prefix + ".data.tsv";
    const std::string labels_path = flags.out_prefix + ".labels.tsv";
    const std::string truth_path = flags.out_prefix + ".truth.tsv";
    write_expression_matrix(ds.x, data_path);
    write_labels(ds.labels, ds.x.sample_ids, labels_path);
    write_truth(ds.truth, simulate_metadata(flags, ds.x.genes(), flags.seed), truth_path);

    std::cout << data_path << '\n' << labels_path << '\n' << truth_path << '\n';
    return 0;
}

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t pos = csv.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(csv.substr(start));
            break;
        }
        out.push_back(csv.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

int cmd_evaluate(const EvaluateFlags& flags) {
    if (flags.study) {
        StudyConfig config;
        config.generator = [&flags](std::uint64_t seed) {
            return generate_dataset(flags.gen, seed);
        };
        config.methods = split_csv(flags.methods);
        config.list_sizes.assign(flags.list_sizes.begin(), flags.list_sizes.end());
        config.replicates = flags.replicates;
        config.seed = flags.seed;
        config.options.P = flags.P;
        config.options.delta = flags.delta;
        config.options.method = parse_solver(flags.solver);

        const EvaluationReport report = run_study(config);
        const std::string series_path = flags.output + ".study.tsv";
        const std::string summary_path = flags.output + ".summary.tsv";
        write_study_series(report, series_path);
        write_study_summary(report, summary_path);
        std::cout << series_path << '\n' << summary_path << '\n';
        return 0;
    }

    if (flags.lists.empty()) {
        throw ValidationError("evaluate needs --list files (or --study)");
    }
    const GroundTruth truth = load_truth(flags.truth);

    EvaluationReport report;
    std::vector<RankedGeneList> lists;
    for (std::size_t i = 0; i < flags.lists.size(); ++i) {
        lists.push_back(load_ranked_list(flags.lists[i]));
        const FdrScore score = empirical_fdr(lists.back(), truth);
        StudyRow row;
        row.replicate = static_cast<int>(i);
        row.method = lists.back().meta.method == "raw_t" ? "raw_t" : "tellipsoid";
        row.R = score.R;
        row.no_fp = score.no_fp;
        row.fdr = score.fdr;
        report.series.push_back(std::move(row));
    }

    if (flags.output.empty()) write_study_series(report, std::cout);
    else write_study_series(report, flags.output);

    if (!flags.table.empty()) {
        if (lists.size() != 2) {
            throw ValidationError("--table needs exactly two lists (tellipsoid and raw_t)");
        }
        const bool first_raw = lists[0].meta.method == "raw_t";
        const RankedGeneList& tell = first_raw ? lists[1] : lists[0];
        const RankedGeneList& raw = first_raw ? lists[0] : lists[1];
        if (raw.meta.method != "raw_t" || tell.meta.method == "raw_t") {
            throw ValidationError("--table needs one tellipsoid list and one raw_t list");
        }
        std::ofstream out(flags.table);
        if (!out) throw IoError("cannot open '" + flags.table + "' for writing");
        out << comparison_table(tell, raw, truth);
        if (!out) throw IoError("write failed for '" + flags.table + "'");
    }
    return 0;
}

int cmd_covlab(const CovlabFlags& flags) {
    double rho1 = 0.0;
    double rho2 = 0.0;
    if (flags.obs == 1) {
        if (!flags.rho) throw ValidationError("observation 1 requires --rho");
        rho1 = rho2 = *flags.rho;
    } else {
        if (!flags.rho1 || !flags.rho2) {
            throw ValidationError("observations 2 and 3 require --rho1 and --rho2");
        }
        rho1 = *flags.rho1;
        rho2 = *flags.rho2;
    }

    const ObservationReport report =
        verify_observation(flags.obs, rho1, rho2, flags.n1, flags.n2, flags.reps, flags.seed);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "obs %d: empirical=%.6f theoretical=%.6f abs_error=%.6f reps=%ld", flags.obs,
                  report.empirical_cov, report.theoretical_cov, report.abs_error, report.reps);
    std::cout << buf << '\n';
    return report.abs_error <= flags.tol ? 0 : 3;
}

void add_generator_flags(CLI::App* cmd, SimulateFlags& flags, bool required) {
    cmd->add_option("--mode", flags.mode, "Generator: standardize or gaussian")
        ->check(CLI::IsMember({"standardize", "gaussian"}));
    cmd->add_option("--input", flags.input, "Base expression TSV (standardize mode)");
    cmd->add_flag("--log10", flags.log10, "Apply log10 to the base matrix on load");
    cmd->add_option("--m", flags.m, "Gene count (gaussian mode)");
    cmd->add_option("--blocksize", flags.block_size, "Correlated block size (gaussian mode)");
    cmd->add_option("--rho", flags.rho, "Within-block correlation (gaussian mode)");
    auto* mu = cmd->add_option("--mu", flags.m_u, "Up-regulated gene count");
    auto* md = cmd->add_option("--md", flags.m_d, "Down-regulated gene count");
    auto* xu = cmd->add_option("--xu", flags.x_u, "Up offset (> 0)");
    auto* xd = cmd->add_option("--xd", flags.x_d, "Down offset (< 0)");
    auto* n1 = cmd->add_option("--n1", flags.n1, "Group-1 size");
    auto* n2 = cmd->add_option("--n2", flags.n2, "Group-2 size");
    if (required) {
        for (auto* opt : {mu, md, xu, xd, n1, n2}) opt->required();
    }
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Tellipsoid: correlation-adjusted differential gene expression ranking"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Cap internal worker threads (0 = library default)");

    RankFlags rank_flags;
    auto* rank = app.add_subcommand("rank", "Rank genes of a labeled expression matrix");
    rank->add_option("--input", rank_flags.input, "Expression TSV")->required();
    rank->add_option("--labels", rank_flags.labels, "Labels TSV")->required();
    rank->add_option("--R", rank_flags.R, "Gene list size")->required();
    rank->add_option("--output", rank_flags.output, "Output TSV (default: stdout)");
    rank->add_option("--P", rank_flags.P, "Zero-assumption percentage (default 50)");
    rank->add_option("--delta", rank_flags.delta, "Diagonal jitter (default 1e-10)");
    rank->add_option("--solver", rank_flags.solver, "auto, dense, or lowrank")
        ->check(CLI::IsMember({"auto", "dense", "lowrank"}));
    rank->add_option("--stat", rank_flags.stat, "tellipsoid (default) or raw")
        ->check(CLI::IsMember({"tellipsoid", "raw"}));
    rank->add_flag("--log10", rank_flags.log10, "Apply log10 on load");

    SimulateFlags sim_flags;
    auto* simulate = app.add_subcommand("simulate", "Generate a dataset with known truth");
    add_generator_flags(simulate, sim_flags, /*required=*/true);
    simulate->add_option("--seed", sim_flags.seed, "RNG seed")->required();
    simulate->add_option("--out-prefix", sim_flags.out_prefix,
                         "Prefix for .data.tsv/.labels.tsv/.truth.tsv")
        ->required();

    EvaluateFlags eval_flags;
    auto* evaluate = app.add_subcommand("evaluate", "Score ranked lists against ground truth");
    evaluate->add_option("--list", eval_flags.lists, "Ranked list TSV (repeatable)");
    evaluate->add_option("--truth", eval_flags.truth, "Truth TSV");
    evaluate->add_option("--output", eval_flags.output,
                         "Report TSV for single mode (default stdout); prefix in study mode");
    evaluate->add_option("--table", eval_flags.table,
                         "Write a comparison table (needs one tellipsoid and one raw_t list)");
    evaluate->add_flag("--study", eval_flags.study, "Run a replicated generator study");
    add_generator_flags(evaluate, eval_flags.gen, /*required=*/false);
    evaluate->add_option("--methods", eval_flags.methods, "Comma-separated methods (study mode)");
    evaluate->add_option("--R", eval_flags.list_sizes, "List size(s) to score (study mode)");
    evaluate->add_option("--replicates", eval_flags.replicates, "Replicate count (study mode)");
    auto* study_seed = evaluate->add_option("--seed", eval_flags.seed, "Study seed (study mode)");
    evaluate->add_option("--P", eval_flags.P, "Zero-assumption percentage (default 50)");
    evaluate->add_option("--delta", eval_flags.delta, "Diagonal jitter (default 1e-10)");
    evaluate->add_option("--solver", eval_flags.solver, "auto, dense, or lowrank")
        ->check(CLI::IsMember({"auto", "dense", "lowrank"}));

    CovlabFlags cov_flags;
    auto* covlab = app.add_subcommand("covlab", "Monte Carlo check of the t-covariance formulas");
    covlab->add_option("--obs", cov_flags.obs, "Observation: 1, 2, or 3")->required();
    double rho_val = 0.0, rho1_val = 0.0, rho2_val = 0.0;
    auto* rho_opt = covlab->add_option("--rho", rho_val, "Common correlation (obs 1)");
    auto* rho1_opt = covlab->add_option("--rho1", rho1_val, "Group-1 correlation (obs 2, 3)");
    auto* rho2_opt = covlab->add_option("--rho2", rho2_val, "Group-2 correlation (obs 2, 3)");
    covlab->add_option("--n1", cov_flags.n1, "Group-1 size")->required();
    covlab->add_option("--n2", cov_flags.n2, "Group-2 size")->required();
    covlab->add_option("--reps", cov_flags.reps, "Replicates (default 100000)");
    covlab->add_option("--seed", cov_flags.seed, "RNG seed")->required();
    covlab->add_option("--tol", cov_flags.tol, "Acceptance tolerance (default 0.03)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the diagnostic
        return 1;
    }

    if (threads > 0) Eigen::setNbThreads(threads);

    try {
        if (rank->parsed()) return cmd_rank(rank_flags);
        if (simulate->parsed()) return cmd_simulate(sim_flags);
        if (evaluate->parsed()) {
            if (eval_flags.study) {
                if (eval_flags.list_sizes.empty() || eval_flags.replicates < 1) {
                    throw ValidationError("study mode needs --R and --replicates");
                }
                if (study_seed->count() == 0) throw ValidationError("study mode needs --seed");
                if (eval_flags.output.empty()) {
                    throw ValidationError("study mode needs --output (used as a prefix)");
                }
            } else if (eval_flags.truth.empty()) {
                throw ValidationError("evaluate needs --truth (or --study)");
            }
            return cmd_evaluate(eval_flags);
        }
        if (covlab->parsed()) {
            if (rho_opt->count() > 0) cov_flags.rho = rho_val;
            if (rho1_opt->count() > 0) cov_flags.rho1 = rho1_val;
            if (rho2_opt->count() > 0) cov_flags.rho2 = rho2_val;
            return cmd_covlab(cov_flags);
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace tellipsoid::cli
