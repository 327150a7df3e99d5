#pragma once

#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "daniel/ising.hpp"

namespace daniel {

struct LabeledScores {
    std::vector<double> scores;
    std::vector<int> labels;
};

struct Edge {
    Index source;
    Index target;
    double weight;

    bool operator==(const Edge&) const = default;
};

/// Pairs with source < target, in row-major upper-triangle order.
struct EdgeList {
    std::vector<Edge> edges;
    double threshold = 0.0;

    /// Header "source,target,weight"; indices are 0-based.
    void write_csv(std::ostream& out) const;
    void write_csv(const std::filesystem::path& path) const;
};

double frob_error(const MatrixXd& theta_hat, const MatrixXd& theta_star);

/// Mann-Whitney statistic with ties counted as one half.
double auc(const LabeledScores& ls);

std::vector<double> pair_scores(const MatrixXd& theta_hat, const std::vector<std::pair<Index, Index>>& pairs);

/// P(X_j = +1 | X_-j = x_-j) under theta_hat.
double phenotype_score(const ParameterMatrix& theta_hat, const BinarySample& x, Index j);

VectorXd embed(const MatrixXd& u_hat, const BinarySample& x);

/// Keeps upper-triangle entries at or above the nearest-rank quantile of all
/// upper-triangle off-diagonal values.
EdgeList kg_edges(const MatrixXd& theta_hat, double quantile);

/// Nearest-rank quantile: the ceil(q * N)-th smallest value (1-based, at least 1).
double nearest_rank_quantile(std::vector<double> values, double q);

} // namespace daniel
