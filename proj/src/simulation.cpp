#include "tellipsoid/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace tellipsoid {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

Rng::Rng(std::uint64_t seed) {
    // Standard xoshiro seeding: expand the seed through splitmix64.
    for (auto& s : state_) s = splitmix64(seed);
}

std::uint64_t Rng::next_u64() {
    // xoshiro256++
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
    // Rejection sampling keeps the draw exactly uniform.
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = seed ^ (0xA0761D6478BD642FULL * (index + 1));
    std::uint64_t out = splitmix64(state);
    return splitmix64(state) ^ out;
}

ExpressionMatrix row_standardize(const ExpressionMatrix& x, const GroupLabels& labels) {
    validate(labels, x.samples());
    const Eigen::Index m = x.genes();
    const Eigen::Index n = x.samples();

    ExpressionMatrix out = x;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (int group : {1, 2}) {
            double sum = 0.0;
            int count = 0;
            bool constant = true;
            bool seen = false;
            double first = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (labels.assignment[static_cast<std::size_t>(j)] != group) continue;
                const double v = x.values(i, j);
                sum += v;
                ++count;
                if (!seen) {
                    first = v;
                    seen = true;
                } else if (v != first) {
                    constant = false;
                }
            }
            if (constant) {
                throw ValidationError("gene '" + x.gene_ids[static_cast<std::size_t>(i)] +
                                      "' is constant within group " + std::to_string(group));
            }
            const double mean = sum / count;
            double msq = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (labels.assignment[static_cast<std::size_t>(j)] != group) continue;
                const double d = x.values(i, j) - mean;
                msq += d * d;
            }
            msq /= count;
            const double scale = 1.0 / std::sqrt(msq);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (labels.assignment[static_cast<std::size_t>(j)] != group) continue;
                out.values(i, j) = (x.values(i, j) - mean) * scale;
            }
        }
    }
    return out;
}

GroupLabels random_group_split(Eigen::Index n, int n1, int n2, std::uint64_t seed) {
    if (n1 + n2 != n) {
        throw ValidationError("group sizes must sum to the sample count (n1=" +
                              std::to_string(n1) + ", n2=" + std::to_string(n2) + ", n=" +
                              std::to_string(n) + ")");
    }
    if (n1 < 2 || n2 < 2) {
        throw ValidationError("each group needs at least 2 samples (n1=" + std::to_string(n1) +
                              ", n2=" + std::to_string(n2) + ")");
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(seed);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    GroupLabels labels;
    labels.assignment.assign(static_cast<std::size_t>(n), 2);
    for (int k = 0; k < n1; ++k) {
        labels.assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
    }
    labels.n1 = n1;
    labels.n2 = n2;
    return labels;
}

void validate(const SpikeSpec& spec, Eigen::Index m) {
    if (spec.m_u < 0 || spec.m_d < 0) throw ValidationError("spike counts must be non-negative");
    if (spec.m_u + spec.m_d >= m) {
        throw ValidationError("m_u + m_d must be smaller than the gene count (" +
                              std::to_string(spec.m_u + spec.m_d) + " >= " + std::to_string(m) +
                              ")");
    }
    if (!(spec.x_u > 0.0)) throw ValidationError("x_u must be positive");
    if (!(spec.x_d < 0.0)) throw ValidationError("x_d must be negative");
}

std::string to_string(Direction d) {
    switch (d) {
        case Direction::up: return "up";
        case Direction::down: return "down";
        default: return "null";
    }
}

Direction direction_from_string(const std::string& s) {
    if (s == "up") return Direction::up;
    if (s == "down") return Direction::down;
    if (s == "null") return Direction::null_gene;
    throw ValidationError("unknown direction token '" + s + "' (expected up, down, or null)");
}

std::pair<ExpressionMatrix, GroundTruth> spike_in(const ExpressionMatrix& x_std,
                                                  const GroupLabels& labels,
                                                  const SpikeSpec& spec) {
    validate(labels, x_std.samples());
    const Eigen::Index m = x_std.genes();
    validate(spec, m);

    // Partial Fisher-Yates: the first m_u + m_d pool entries are a uniform
    // sample without replacement.
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(m));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    Rng rng(spec.seed);
    const Eigen::Index chosen = spec.m_u + spec.m_d;
    for (Eigen::Index i = 0; i < chosen; ++i) {
        const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }

    ExpressionMatrix out = x_std;
    GroundTruth truth;
    truth.gene_ids = x_std.gene_ids;
    truth.direction.assign(static_cast<std::size_t>(m), Direction::null_gene);
    truth.differential_flags.assign(static_cast<std::size_t>(m), 0);

    for (Eigen::Index k = 0; k < chosen; ++k) {
        const Eigen::Index gene = pool[static_cast<std::size_t>(k)];
        const bool up = k < spec.m_u;
        const double offset = up ? spec.x_u : spec.x_d;
        truth.direction[static_cast<std::size_t>(gene)] = up ? Direction::up : Direction::down;
        truth.differential_flags[static_cast<std::size_t>(gene)] = 1;
        for (Eigen::Index j = 0; j < x_std.samples(); ++j) {
            if (labels.assignment[static_cast<std::size_t>(j)] == 2) {
                out.values(gene, j) += offset;
            }
        }
    }
    return {std::move(out), std::move(truth)};
}

void validate(const BlockCovSpec& cov) {
    if (cov.m < 1) throw ValidationError("block covariance needs at least one gene");
    if (cov.block_size < 1 || cov.block_size > cov.m) {
        throw ValidationError("block_size must lie in [1, m]");
    }
    if (cov.block_size >= 2) {
        const double lower = -1.0 / static_cast<double>(cov.block_size - 1);
        if (!(cov.rho > lower && cov.rho < 1.0)) {
            throw ValidationError("rho must lie in (" + std::to_string(lower) +
                                  ", 1) for positive definiteness");
        }
    } else if (!(cov.rho >= -1.0 && cov.rho <= 1.0)) {
        throw ValidationError("rho must lie in [-1, 1]");
    }
}

namespace {

std::vector<std::string> make_ids(const std::string& prefix, Eigen::Index count) {
    int width = 1;
    for (Eigen::Index v = count; v >= 10; v /= 10) ++width;
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(count));
    for (Eigen::Index i = 1; i <= count; ++i) {
        std::string digits = std::to_string(i);
        ids.push_back(prefix + std::string(static_cast<std::size_t>(width) - digits.size(), '0') +
                      digits);
    }
    return ids;
}

// Lower Cholesky factor of the equicorrelated block (1-rho)I + rho*11^T.
Eigen::MatrixXd block_cholesky(Eigen::Index size, double rho) {
    Eigen::MatrixXd block = Eigen::MatrixXd::Constant(size, size, rho);
    block.diagonal().setOnes();
    const Eigen::LLT<Eigen::MatrixXd> llt(block);
    if (llt.info() != Eigen::Success) {
        throw ValidationError("block covariance is not positive definite");
    }
    return llt.matrixL();
}

} // namespace

SimulatedDataset gaussian_generate(const BlockCovSpec& cov, int n1, int n2,
                                   const SpikeSpec& spike) {
    validate(cov);
    validate(spike, cov.m);
    if (n1 < 2 || n2 < 2) {
        throw ValidationError("each group needs at least 2 samples (n1=" + std::to_string(n1) +
                              ", n2=" + std::to_string(n2) + ")");
    }

    const Eigen::Index m = cov.m;
    const Eigen::Index n = n1 + n2;
    const Eigen::MatrixXd chol_full = block_cholesky(cov.block_size, cov.rho);
    const Eigen::Index tail = m % cov.block_size;
    const Eigen::MatrixXd chol_tail =
        tail > 0 ? block_cholesky(tail, cov.rho) : Eigen::MatrixXd();

    SimulatedDataset ds;
    ds.x.gene_ids = make_ids("g", m);
    ds.x.sample_ids = make_ids("s", n);
    ds.x.values.resize(m, n);

    Rng rng(derive_seed(spike.seed, 1));
    Eigen::VectorXd z(cov.block_size);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index start = 0; start < m; start += cov.block_size) {
            const Eigen::Index size = std::min(cov.block_size, m - start);
            for (Eigen::Index k = 0; k < size; ++k) z[k] = rng.normal();
            const Eigen::MatrixXd& chol = size == cov.block_size ? chol_full : chol_tail;
            ds.x.values.col(j).segment(start, size).noalias() = chol * z.head(size);
        }
    }

    ds.labels.assignment.assign(static_cast<std::size_t>(n), 2);
    for (int k = 0; k < n1; ++k) ds.labels.assignment[static_cast<std::size_t>(k)] = 1;
    ds.labels.n1 = n1;
    ds.labels.n2 = n2;

    SpikeSpec spike_stage = spike;
    spike_stage.seed = derive_seed(spike.seed, 2);
    auto [spiked, truth] = spike_in(ds.x, ds.labels, spike_stage);
    ds.x = std::move(spiked);
    ds.truth = std::move(truth);
    return ds;
}

SimulatedDataset standardize_generate(const ExpressionMatrix& base, const SpikeSpec& spike) {
    validate(base);
    if (spike.n1 + spike.n2 != base.samples()) {
        throw ValidationError("spike spec group sizes must sum to the base sample count");
    }

    SimulatedDataset ds;
    ds.labels = random_group_split(base.samples(), spike.n1, spike.n2,
                                   derive_seed(spike.seed, 1));
    const ExpressionMatrix standardized = row_standardize(base, ds.labels);

    SpikeSpec spike_stage = spike;
    spike_stage.seed = derive_seed(spike.seed, 2);
    auto [spiked, truth] = spike_in(standardized, ds.labels, spike_stage);
    ds.x = std::move(spiked);
    ds.truth = std::move(truth);
    return ds;
}

ObservationReport verify_observation(int obs, double rho1, double rho2, int n1, int n2,
                                     long reps, std::uint64_t seed) {
    if (obs < 1 || obs > 3) throw ValidationError("observation must be 1, 2, or 3");
    if (!(rho1 >= -1.0 && rho1 <= 1.0) || !(rho2 >= -1.0 && rho2 <= 1.0)) {
        throw ValidationError("correlation must lie in [-1, 1]");
    }
    if (obs == 1 && rho1 != rho2) {
        throw ValidationError("observation 1 assumes a common correlation (rho1 == rho2)");
    }
    if (obs == 3 && n1 != n2) throw ValidationError("observation 3 requires n1 == n2");
    if (n1 < 2 || n2 < 2) throw ValidationError("group sizes must be at least 2");
    if (n1 + n2 < 5) throw ValidationError("need nu = n1 + n2 - 2 > 2");
    if (reps < 10000) throw ValidationError("need at least 10000 replicates");

    const double nu = n1 + n2 - 2;
    const double size_factor = 1.0 / n1 + 1.0 / n2;
    const double root1 = std::sqrt(std::max(0.0, 1.0 - rho1 * rho1));
    const double root2 = std::sqrt(std::max(0.0, 1.0 - rho2 * rho2));

    Rng rng(seed);
    std::vector<double> a(static_cast<std::size_t>(n1 + n2));
    std::vector<double> b(static_cast<std::size_t>(n1 + n2));
    double sum_t1 = 0.0, sum_t2 = 0.0, sum_t1t2 = 0.0;

    for (long rep = 0; rep < reps; ++rep) {
        for (int j = 0; j < n1 + n2; ++j) {
            const bool in_group1 = j < n1;
            const double rho = in_group1 ? rho1 : rho2;
            const double root = in_group1 ? root1 : root2;
            const double z1 = rng.normal();
            const double z2 = rng.normal();
            a[static_cast<std::size_t>(j)] = z1;
            b[static_cast<std::size_t>(j)] = rho * z1 + root * z2;
            // Observation 2: gene 2 is differential, shifted by one
            // within-group SD in group 2.
            if (obs == 2 && !in_group1) b[static_cast<std::size_t>(j)] += 1.0;
        }

        double t_pair[2];
        for (int gene = 0; gene < 2; ++gene) {
            const std::vector<double>& v = gene == 0 ? a : b;
            double sum1 = 0.0, sum2 = 0.0;
            for (int j = 0; j < n1; ++j) sum1 += v[static_cast<std::size_t>(j)];
            for (int j = n1; j < n1 + n2; ++j) sum2 += v[static_cast<std::size_t>(j)];
            const double mean1 = sum1 / n1;
            const double mean2 = sum2 / n2;
            double ss = 0.0;
            for (int j = 0; j < n1 + n2; ++j) {
                const double d = v[static_cast<std::size_t>(j)] - (j < n1 ? mean1 : mean2);
                ss += d * d;
            }
            t_pair[gene] = (mean2 - mean1) / std::sqrt(ss / nu * size_factor);
        }
        sum_t1 += t_pair[0];
        sum_t2 += t_pair[1];
        sum_t1t2 += t_pair[0] * t_pair[1];
    }

    ObservationReport report;
    report.reps = reps;
    const double r = static_cast<double>(reps);
    report.empirical_cov = (sum_t1t2 - sum_t1 * sum_t2 / r) / (r - 1.0);
    report.theoretical_cov = theoretical_tcov(rho1, rho2, n1, n2, nu);
    report.abs_error = std::abs(report.empirical_cov - report.theoretical_cov);
    return report;
}

void write_truth(const GroundTruth& truth, const std::vector<std::string>& metadata,
                 const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& item : metadata) out << "# " << item << '\n';
    out << "gene_id\tdirection\n";
    for (std::size_t i = 0; i < truth.gene_ids.size(); ++i) {
        out << truth.gene_ids[i] << '\t' << to_string(truth.direction[i]) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

GroundTruth read_truth(std::istream& in, const std::string& source_name) {
    GroundTruth truth;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ValidationError(source_name + ": line " + std::to_string(line_no) +
                                  ": expected 2 columns");
        }
        const std::string id = line.substr(0, tab);
        const std::string dir = line.substr(tab + 1);
        if (id == "gene_id" && dir == "direction") continue; // header
        truth.gene_ids.push_back(id);
        truth.direction.push_back(direction_from_string(dir));
        truth.differential_flags.push_back(truth.direction.back() != Direction::null_gene ? 1 : 0);
    }
    if (truth.gene_ids.empty()) {
        throw ValidationError(source_name + ": truth file contains no genes");
    }
    return truth;
}

GroundTruth load_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return read_truth(in, path);
}

} // namespace tellipsoid
