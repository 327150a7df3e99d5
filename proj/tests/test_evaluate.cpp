#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "daniel/evaluate.hpp"
#include "daniel/sampling.hpp"
#include "support.hpp"

using namespace daniel;

namespace {

double brute_auc(const LabeledScores& ls) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < ls.scores.size(); ++i)
        for (std::size_t j = 0; j < ls.scores.size(); ++j)
            if (ls.labels[i] == 1 && ls.labels[j] == 0) {
                pairs += 1;
                if (ls.scores[i] > ls.scores[j])
                    wins += 1;
                else if (ls.scores[i] == ls.scores[j])
                    wins += 0.5;
            }
    return wins / pairs;
}

std::vector<Edge> sort_and_cut(const MatrixXd& m, double q) {
    std::vector<Edge> all;
    for (Index j = 0; j < m.rows(); ++j)
        for (Index k = j + 1; k < m.cols(); ++k)
            all.push_back({j, k, m(j, k)});
    std::vector<Edge> sorted = all;
    std::sort(sorted.begin(), sorted.end(), [](const Edge& a, const Edge& b) { return a.weight > b.weight; });
    const auto n = sorted.size();
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    // Keep everything at or above the rank-th smallest value.
    const double cut = sorted[n - rank].weight;
    std::vector<Edge> out;
    for (const Edge& e : all)
        if (e.weight >= cut)
            out.push_back(e);
    return out;
}

} // namespace

TEST_SUITE("evaluate") {

TEST_CASE("frob_error fixtures") {
    const MatrixXd a = fixtures::random_matrix(4, 4, 1);
    CHECK(frob_error(a, a) == 0.0);
    CHECK(std::abs(frob_error(a + MatrixXd::Identity(4, 4), a) - 2.0) < 1e-12);
    const MatrixXd b = fixtures::random_matrix(4, 4, 2);
    double s = 0;
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j)
            s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
    CHECK(std::abs(frob_error(a, b) - std::sqrt(s)) < 1e-12);
    CHECK_THROWS_AS(frob_error(a, MatrixXd::Zero(3, 3)), ContractError);
}

TEST_CASE("frob_error triangle inequality") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const MatrixXd a = fixtures::random_matrix(5, 5, 3 * s), b = fixtures::random_matrix(5, 5, 3 * s + 1),
                       c = fixtures::random_matrix(5, 5, 3 * s + 2);
        CHECK(frob_error(a, c) <= frob_error(a, b) + frob_error(b, c) + 1e-12);
    }
}

TEST_CASE("auc fixtures") {
    CHECK(auc({{0.9, 0.8, 0.1}, {1, 1, 0}}) == 1.0);
    CHECK(auc({{0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0}}) == 0.5);
    const LabeledScores mixed{{0.3, 0.7, 0.7, 0.1, 0.5, 0.9}, {0, 1, 0, 0, 1, 1}};
    CHECK(std::abs(auc(mixed) - brute_auc(mixed)) < 1e-15);
    CHECK_THROWS_AS(auc({{0.1, 0.2}, {1, 1}}), ContractError);
    CHECK_THROWS_AS(auc({{0.1, 0.2}, {1}}), ContractError);
    CHECK_THROWS_AS(auc({{0.1, 0.2}, {1, 2}}), ContractError);
}

TEST_CASE("auc properties against the brute-force oracle") {
    const CounterRng rng(5, 6);
    for (int t = 0; t < 50; ++t) {
        LabeledScores ls;
        for (int i = 0; i < 40; ++i) {
            const std::uint64_t c = static_cast<std::uint64_t>(t * 100 + i);
            ls.scores.push_back(std::round(rng.uniform(2 * c) * 10) / 10); // plenty of ties
            ls.labels.push_back(rng.uniform(2 * c + 1) < 0.4 ? 1 : 0);
        }
        ls.labels[0] = 1;
        ls.labels[1] = 0;
        const double a = auc(ls);
        CHECK(std::abs(a - brute_auc(ls)) < 1e-12);

        LabeledScores neg = ls;
        for (double& s : neg.scores)
            s = -s;
        CHECK(std::abs(auc(neg) - (1 - a)) < 1e-12);

        LabeledScores mono = ls;
        for (double& s : mono.scores)
            s = std::exp(3 * s) + 1;
        CHECK(std::abs(auc(mono) - a) < 1e-12);
    }
}

TEST_CASE("pair_scores fixtures") {
    CHECK(pair_scores(MatrixXd::Identity(3, 3), {{0, 1}, {1, 2}}) == std::vector<double>{0, 0});
    MatrixXd t = MatrixXd::Zero(3, 3);
    t(0, 1) = t(1, 0) = 0.7;
    CHECK(pair_scores(t, {{0, 1}, {1, 0}}) == std::vector<double>{0.7, 0.7});
    CHECK_THROWS_AS(pair_scores(t, {{0, 3}}), ContractError);
    CHECK_THROWS_AS(pair_scores(t, {{1, 1}}), ContractError);
}

TEST_CASE("phenotype_score fixtures") {
    CHECK(phenotype_score(ParameterMatrix::zero(3), BinarySample{1, -1, 1}, 1) == 0.5);
    MatrixXd t = MatrixXd::Zero(2, 2);
    t(0, 1) = t(1, 0) = 1;
    CHECK(phenotype_score(ParameterMatrix(t), BinarySample{-1, 1}, 0) > 0.5);
    // The target coordinate's observed value is irrelevant.
    CHECK(phenotype_score(ParameterMatrix(t), BinarySample{-1, 1}, 0) ==
          phenotype_score(ParameterMatrix(t), BinarySample{1, 1}, 0));

    const ParameterMatrix theta(fixtures::random_symmetric(6, 9, 0.5));
    const ExactTable table = exact_table(theta);
    for (std::uint64_t s = 0; s < table.probs.size(); s += 7) {
        const BinarySample x = table.state(s);
        for (Index j = 0; j < 6; ++j)
            CHECK(std::abs(phenotype_score(theta, x, j) - table.conditional_plus(x, j)) < 1e-12);
    }
}

TEST_CASE("embed fixtures") {
    const MatrixXd u = MatrixXd::Identity(5, 2);
    const BinarySample x{1, -1, 1, 1, -1};
    CHECK(embed(u, x) == (VectorXd(2) << 1, -1).finished());
    const MatrixXd r = fixtures::random_matrix(5, 3, 4);
    BinarySample neg = x;
    for (Index j = 0; j < 5; ++j)
        neg = neg.flipped(j);
    CHECK(embed(r, neg) == -embed(r, x));
    for (Index k = 0; k < 3; ++k) {
        double dot = 0;
        for (Index j = 0; j < 5; ++j)
            dot += r(j, k) * x[j];
        CHECK(std::abs(embed(r, x)(k) - dot) < 1e-12);
    }
    CHECK_THROWS_AS(embed(r, BinarySample{1, 1}), ContractError);
}

TEST_CASE("kg_edges fixtures") {
    MatrixXd t = MatrixXd::Zero(3, 3);
    t(0, 1) = t(1, 0) = 0.1;
    t(0, 2) = t(2, 0) = 0.2;
    t(1, 2) = t(2, 1) = 0.3;
    EdgeList e = kg_edges(t, 0.95);
    REQUIRE(e.edges.size() == 1);
    CHECK(e.edges[0] == Edge{1, 2, 0.3});
    CHECK(kg_edges(t, 1e-9).edges.size() == 3);
    CHECK_THROWS_AS(kg_edges(MatrixXd::Zero(1, 1), 0.5), ContractError);
}

TEST_CASE("kg_edges matches the sort-and-cut oracle and the size bound") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const MatrixXd m = fixtures::random_symmetric(10, 60 + s);
        for (double q : {0.5, 0.9, 0.95}) {
            const EdgeList e = kg_edges(m, q);
            CHECK(e.edges == sort_and_cut(m, q));
            const double expect = (1 - q) * 45;
            CHECK(std::abs(static_cast<double>(e.edges.size()) - expect) <= 1.0 + 1e-9);
            for (const Edge& x : e.edges) {
                CHECK(x.source < x.target);
                CHECK(x.weight >= e.threshold);
            }
        }
    }
}

TEST_CASE("edge list csv") {
    EdgeList e;
    e.edges = {{0, 3, 0.5}, {1, 2, -0.25}};
    std::ostringstream out;
    e.write_csv(out);
    CHECK(out.str() == "source,target,weight\n0,3,0.5\n1,2,-0.25\n");
}

} // TEST_SUITE
