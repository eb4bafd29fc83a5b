#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tellipsoid/correlation.hpp"
#include "tellipsoid/expression_data.hpp"

namespace tellipsoid {

// Fully specified RNG so that simulated fixtures are bit-stable across
// compilers and standard libraries: splitmix64 for seeding/stream
// derivation, xoshiro256++ as the core generator, Box-Muller for normals.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform01();                    // in [0, 1)
    double normal();                       // standard normal
    std::uint64_t below(std::uint64_t n);  // uniform in [0, n), unbiased

private:
    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Independent stream seed for (seed, index); used for per-replicate and
// per-stage sub-seeds so stages stay individually reproducible.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Per gene and group: subtract the group mean, then scale the group's
// entries to unit mean square. Preserves within-group inter-gene
// correlations exactly (per-row affine map within each group). Throws for a
// gene constant within a group.
ExpressionMatrix row_standardize(const ExpressionMatrix& x, const GroupLabels& labels);

// Uniformly random assignment with exact group counts; deterministic given
// the seed.
GroupLabels random_group_split(Eigen::Index n, int n1, int n2, std::uint64_t seed);

// Spike-in design: how many genes get up-/down-regulated and by how much.
struct SpikeSpec {
    Eigen::Index m_u = 0; // up-regulated gene count
    Eigen::Index m_d = 0; // down-regulated gene count
    double x_u = 0.0;     // > 0, added to group-2 entries of up genes
    double x_d = 0.0;     // < 0, added to group-2 entries of down genes
    int n1 = 0;           // group sizes for the split
    int n2 = 0;
    std::uint64_t seed = 0;
};

void validate(const SpikeSpec& spec, Eigen::Index m);

enum class Direction { up, down, null_gene };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

// Which genes were made differential, aligned to the generated matrix.
struct GroundTruth {
    std::vector<std::string> gene_ids;
    std::vector<Direction> direction;
    std::vector<char> differential_flags; // direction != null

    Eigen::Index genes() const { return static_cast<Eigen::Index>(gene_ids.size()); }
};

// Choose m_u + m_d distinct genes uniformly at random and add the offset to
// their group-2 entries only. Exactly (m_u + m_d) * n2 entries change.
std::pair<ExpressionMatrix, GroundTruth> spike_in(const ExpressionMatrix& x_std,
                                                  const GroupLabels& labels,
                                                  const SpikeSpec& spec);

// Block-diagonal covariance: unit diagonal, rho inside blocks of
// block_size consecutive genes. PD requires rho in (-1/(block_size-1), 1).
struct BlockCovSpec {
    Eigen::Index m = 0;
    Eigen::Index block_size = 1;
    double rho = 0.0;
};

void validate(const BlockCovSpec& cov);

struct SimulatedDataset {
    ExpressionMatrix x;
    GroupLabels labels;
    GroundTruth truth;
};

// n1 + n2 independent columns from N(0, W) via per-block Cholesky factors,
// then spike offsets on group-2 columns. Labels are the first n1 columns in
// group 1 (the columns are exchangeable). Deterministic given spec.seed.
SimulatedDataset gaussian_generate(const BlockCovSpec& cov, int n1, int n2,
                                   const SpikeSpec& spike);

// The real-data surrogate protocol: random n1/n2 split of the base matrix's
// columns, row standardization, spike-in. Sub-seeds derive from spike.seed.
SimulatedDataset standardize_generate(const ExpressionMatrix& base, const SpikeSpec& spike);

// Monte Carlo check of the t-covariance observations. Simulates `reps`
// two-gene datasets with within-group correlations rho1 (group 1) and rho2
// (group 2), computes both t-statistics per rep, and compares their
// empirical covariance against theoretical_tcov with nu = n1 + n2 - 2.
//   obs 1: both genes null, rho1 == rho2.
//   obs 2: gene 2 shifted by one within-group SD in group 2.
//   obs 3: both null, rho1 != rho2 allowed, requires n1 == n2.
struct ObservationReport {
    double empirical_cov = 0.0;
    double theoretical_cov = 0.0;
    double abs_error = 0.0;
    long reps = 0;
};

ObservationReport verify_observation(int obs, double rho1, double rho2, int n1, int n2,
                                     long reps, std::uint64_t seed);

// Truth TSV: `gene_id<TAB>direction` rows with direction in {up, down,
// null}; leading `# key=value` comments carry the generator parameters.
void write_truth(const GroundTruth& truth, const std::vector<std::string>& metadata,
                 const std::string& path);
GroundTruth load_truth(const std::string& path);
GroundTruth read_truth(std::istream& in, const std::string& source_name);

} // namespace tellipsoid
