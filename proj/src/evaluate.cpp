#include "daniel/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace daniel {

void EdgeList::write_csv(std::ostream& out) const {
    out << "source,target,weight\n";
    out << std::setprecision(17);
    for (const Edge& e : edges)
        out << e.source << ',' << e.target << ',' << e.weight << '\n';
}

void EdgeList::write_csv(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot open " + path.string() + " for writing");
    write_csv(f);
    if (!f)
        throw IoError("write failed: " + path.string());
}

double frob_error(const MatrixXd& theta_hat, const MatrixXd& theta_star) {
    require(theta_hat.rows() == theta_star.rows() && theta_hat.cols() == theta_star.cols(),
            "frob_error: shape mismatch");
    return (theta_hat - theta_star).norm();
}

double auc(const LabeledScores& ls) {
    require(ls.scores.size() == ls.labels.size(), "auc: scores and labels differ in length");
    std::vector<std::pair<double, int>> v;
    v.reserve(ls.scores.size());
    double pos = 0, neg = 0;
    for (std::size_t i = 0; i < ls.scores.size(); ++i) {
        require(ls.labels[i] == 0 || ls.labels[i] == 1, "auc: labels must be 0 or 1");
        require(!std::isnan(ls.scores[i]), "auc: NaN score");
        v.emplace_back(ls.scores[i], ls.labels[i]);
        (ls.labels[i] == 1 ? pos : neg) += 1;
    }
    require(pos > 0 && neg > 0, "auc: need at least one positive and one negative label");
    std::sort(v.begin(), v.end());

    // Midranks handle ties; U = sum of positive ranks - P(P+1)/2.
    double rank_sum = 0;
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        while (j < v.size() && v[j].first == v[i].first)
            ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (v[k].second == 1)
                rank_sum += mid;
        i = j;
    }
    return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

std::vector<double> pair_scores(const MatrixXd& theta_hat, const std::vector<std::pair<Index, Index>>& pairs) {
    require(theta_hat.rows() == theta_hat.cols(), "pair_scores: matrix must be square");
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [j, k] : pairs) {
        require(j >= 0 && k >= 0 && j < theta_hat.rows() && k < theta_hat.rows(), "pair_scores: index out of range");
        require(j != k, "pair_scores: pair must be off-diagonal");
        out.push_back(theta_hat(j, k));
    }
    return out;
}

double phenotype_score(const ParameterMatrix& theta_hat, const BinarySample& x, Index j) {
    require(x.size() == theta_hat.dim(), "phenotype_score: dimension mismatch");
    require(j >= 0 && j < x.size(), "phenotype_score: index out of range");
    return conditional_prob(theta_hat, x.with(j, 1), j);
}

VectorXd embed(const MatrixXd& u_hat, const BinarySample& x) {
    require(u_hat.rows() == x.size(), "embed: dimension mismatch");
    return u_hat.transpose() * x.as<double>();
}

double nearest_rank_quantile(std::vector<double> values, double q) {
    require(!values.empty(), "nearest_rank_quantile: no values");
    require(q > 0.0 && q < 1.0, "nearest_rank_quantile: q must lie in (0, 1)");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

EdgeList kg_edges(const MatrixXd& theta_hat, double quantile) {
    require(theta_hat.rows() == theta_hat.cols(), "kg_edges: matrix must be square");
    const Index p = theta_hat.rows();
    require(p >= 2, "kg_edges: need p >= 2");
    std::vector<double> upper;
    upper.reserve(static_cast<std::size_t>(p * (p - 1) / 2));
    for (Index j = 0; j < p; ++j)
        for (Index k = j + 1; k < p; ++k)
            upper.push_back(theta_hat(j, k));
    EdgeList out;
    out.threshold = nearest_rank_quantile(upper, quantile);
    for (Index j = 0; j < p; ++j)
        for (Index k = j + 1; k < p; ++k)
            if (theta_hat(j, k) >= out.threshold)
                out.edges.push_back({j, k, theta_hat(j, k)});
    return out;
}

} // namespace daniel
