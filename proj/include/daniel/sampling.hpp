#pragma once

#include <cstdint>
#include <vector>

#include "daniel/ising.hpp"

namespace daniel {

/// Low-rank ground truth Theta* = U* U*^T with U*_ij ~ N(0, 1/(d p)).
struct GroundTruth {
    MatrixXd u_star;
    ParameterMatrix theta_star;
    std::uint64_t seed = 0;
};

/// Exact Ising distribution over {-1,+1}^p for small p.
/// Bit b of the state index is set iff x_{b+1} = +1.
struct ExactTable {
    int p = 0;
    std::vector<double> probs;

    /// Decode a state index into spins.
    BinarySample state(std::uint64_t index) const;
    /// P(X_j = +1 | X_{-j} = x_{-j}) computed from the table.
    double conditional_plus(const BinarySample& x, Index j) const;
};

inline constexpr int kMaxExactDim = 12;

GroundTruth make_ground_truth(Index p, Index d, std::uint64_t seed);

/// Unnormalized log-mass sum_{j<k} theta_jk x_j x_k + sum_j theta_jj x_j.
/// This is the convention whose coordinate conditionals are exactly the
/// logistic of local_field().
double log_potential(const ParameterMatrix& theta, const BinarySample& x);

ExactTable exact_table(const ParameterMatrix& theta);

struct GibbsOptions {
    Index burn_in_sweeps = 200;
    /// Worker threads for independent chains; 0 picks hardware concurrency.
    unsigned threads = 1;
};

/// n independent chains, each started from uniform spins and run for
/// burn_in_sweeps systematic sweeps; the final state of chain l is sample l.
BinaryDataset gibbs_sample(const ParameterMatrix& theta, Index n, std::uint64_t seed, const GibbsOptions& opts = {});

/// i.i.d. draws from the table by inverse CDF.
BinaryDataset exact_sample(const ExactTable& table, Index n, std::uint64_t seed);

/// Empirical state distribution of a dataset with p <= kMaxExactDim.
std::vector<double> empirical_distribution(const BinaryDataset& data);

double total_variation(const std::vector<double>& a, const std::vector<double>& b);

} // namespace daniel
