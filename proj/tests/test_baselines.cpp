#include <doctest.h>

#include "daniel/baselines.hpp"
#include "daniel/federation.hpp"
#include "daniel/sampling.hpp"
#include "support.hpp"

using namespace daniel;

namespace {

double maxabs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

BinaryDataset fixture_data(Index p, Index n, std::uint64_t seed) {
    const GroundTruth gt = make_ground_truth(p, std::max<Index>(1, p / 5), seed);
    return gibbs_sample(gt.theta_star, n, seed, GibbsOptions{20, 1});
}

} // namespace

TEST_SUITE("baselines") {

TEST_CASE("method validation and names") {
    CHECK_THROWS_AS(BaselineMethod::sv_soft(-1), ContractError);
    CHECK_THROWS_AS(BaselineMethod::sv_topd(0), ContractError);
    CHECK(BaselineMethod::sv_hard().tau == 1e-3);
    CHECK(BaselineMethod::psd_cvx().name() == "PsdCvx");
    CHECK_THROWS_AS(GradientSource::surrogate(fixture_data(4, 10, 1), MatrixXd::Zero(3, 3)), ContractError);
}

TEST_CASE("zero step with full top-d is the identity") {
    const BinaryDataset data = fixture_data(6, 50, 2);
    const ParameterMatrix theta(fixtures::random_symmetric(6, 3, 0.2));
    const ParameterMatrix out =
        baseline_step(theta, GradientSource::centralized(data), BaselineMethod::sv_topd(6), 0.0);
    CHECK(maxabs(out.matrix() - theta.matrix()) < 1e-12);
}

TEST_CASE("hard threshold above every singular value gives zero") {
    const BinaryDataset data = fixture_data(6, 50, 3);
    const double eta = 0.1;
    const MatrixXd step = -eta * pseudo_nll_grad(ParameterMatrix::zero(6), data);
    const ParameterMatrix out = baseline_step(ParameterMatrix::zero(6), GradientSource::centralized(data),
                                              BaselineMethod::sv_hard(2 * operator_norm(step)), eta);
    CHECK(out.matrix() == MatrixXd::Zero(6, 6));
}

TEST_CASE("one psd step from zero matches an independent eigensolver") {
    const BinaryDataset data = fixture_data(4, 40, 4);
    const double eta = 0.1;
    const MatrixXd step = -eta * pseudo_nll_grad(ParameterMatrix::zero(4), data);
    Eigen::EigenSolver<MatrixXd> es(step);
    const MatrixXd vecs = es.eigenvectors().real();
    const VectorXd vals = es.eigenvalues().real().cwiseMax(0.0);
    const MatrixXd oracle = vecs * vals.asDiagonal() * vecs.inverse();
    const ParameterMatrix out = baseline_step(ParameterMatrix::zero(4), GradientSource::centralized(data),
                                              BaselineMethod::psd_cvx(), eta);
    CHECK(maxabs(out.matrix() - oracle) < 1e-12);
}

TEST_CASE("surrogate with zero correction follows the centralized trajectory") {
    const BinaryDataset data = fixture_data(8, 200, 5);
    OptimizerConfig cfg;
    cfg.d = 2;
    for (const BaselineMethod& m : {BaselineMethod::sv_soft(), BaselineMethod::sv_hard(), BaselineMethod::sv_topd(2),
                                    BaselineMethod::psd_cvx()}) {
        const FitResult a = baseline_fit(GradientSource::centralized(data), m, cfg);
        const FitResult b = baseline_fit(GradientSource::surrogate(data, MatrixXd::Zero(8, 8)), m, cfg);
        CHECK(a.trace == b.trace);
        CHECK(a.theta_hat.matrix() == b.theta_hat.matrix());
    }
}

TEST_CASE("rank and psd invariants hold on every iterate") {
    const BinaryDataset data = fixture_data(10, 300, 6);
    const Partition part(300, 3);
    const BinaryDataset hub = part.site_data(data, 1);
    const ParameterMatrix theta0 = convex_init(hub, OptimizerConfig{});
    const MatrixXd corr = run_round(TransportOptions{}, part, theta0, data).correction;
    const GradientSource src = GradientSource::surrogate(hub, corr);
    ParameterMatrix topd = ParameterMatrix::zero(10);
    ParameterMatrix psd = ParameterMatrix::zero(10);
    for (int g = 0; g < 50; ++g) {
        topd = baseline_step(topd, src, BaselineMethod::sv_topd(2), 0.1);
        psd = baseline_step(psd, src, BaselineMethod::psd_cvx(), 0.1);
        CHECK(numerical_rank(topd.matrix()) <= 2);
        CHECK(symmetric_eigen(psd.matrix()).eigenvalues().minCoeff() >= -1e-10);
    }
}

TEST_CASE("shared stopping rule and factor output") {
    const BinaryDataset data = fixture_data(10, 300, 7);
    OptimizerConfig cfg;
    cfg.d = 2;
    const FitResult r = baseline_fit(GradientSource::centralized(data), BaselineMethod::sv_topd(2), cfg);
    CHECK(r.iterations_used <= 50);
    CHECK(r.factors.u.rows() == 10);
    CHECK(r.factors.u.cols() == 2);
    CHECK((r.factors.product() - r.theta_hat.matrix()).norm() < 1e-10);
    if (r.iterations_used < 50)
        CHECK(r.trace.back() < cfg.tol);

    cfg.eta = 1e13;
    CHECK_THROWS_AS(baseline_fit(GradientSource::centralized(data), BaselineMethod::psd_cvx(), cfg), DivergenceError);
}

} // TEST_SUITE
