#pragma once

#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "daniel/ising.hpp"

namespace daniel {

struct OptimizerConfig {
    double eta = 0.1;
    int gamma_max = 50;
    double tol = 1e-5;
    /// Nuclear penalty; unset means sqrt(p log p / n_hub).
    std::optional<double> lambda;
    int init_steps = 5;
    double ball_radius = std::numeric_limits<double>::infinity();
    Index d = 1;

    /// Large-p regime: 200 iterations at eta = 0.01.
    static OptimizerConfig large_p(Index d);

    void validate() const;
    double resolved_lambda(Index p, Index n_hub) const;
};

/// Entries beyond this magnitude abort a fit.
inline constexpr double kDivergenceBound = 1e12;

struct FitResult {
    FactorPair factors;
    ParameterMatrix theta_hat;
    int iterations_used = 0;
    /// delta_gamma = ||Theta_gamma - Theta_{gamma-1}||_F for every iteration run.
    std::vector<double> trace;
    double wall_time_ms = 0.0;
};

/// Proximal gradient on the hub loss plus nuclear penalty, from the zero matrix.
ParameterMatrix convex_init(const BinaryDataset& hub_data, const OptimizerConfig& cfg);

/// Gradients of (1/4)||U^T U - V^T V||_F^2 with respect to U and V.
template <typename Derived1, typename Derived2>
std::pair<Matrix<typename Derived1::Scalar>, Matrix<typename Derived1::Scalar>>
balance_gradient(const Eigen::MatrixBase<Derived1>& u, const Eigen::MatrixBase<Derived2>& v) {
    using Scalar = typename Derived1::Scalar;
    require(u.rows() == v.rows() && u.cols() == v.cols(), "balance_gradient: shape mismatch");
    const Matrix<Scalar> pi = u.transpose() * u - v.transpose() * v;
    return {u * pi, -(v * pi)};
}

/// Hub-data gradient plus the one-shot correction term.
MatrixXd surrogate_gradient_theta(const ParameterMatrix& theta, const BinaryDataset& hub_data, const MatrixXd& correction);

/// Surrogate objective L_1(UV^T) + <G, UV^T> + (1/4)||U^T U - V^T V||_F^2.
double surrogate_objective(const FactorPair& f, const BinaryDataset& hub_data, const MatrixXd& correction);

/// Bi-factored gradient descent on the surrogate loss at the hub.
FitResult daniel_fit(const BinaryDataset& hub_data, const MatrixXd& correction, const MatrixXd& u0,
                     const MatrixXd& v0, const OptimizerConfig& cfg);

/// Centralized bi-factored estimator: same iteration without a correction term.
FitResult centralized_fit(const BinaryDataset& data, const MatrixXd& u0, const MatrixXd& v0,
                          const OptimizerConfig& cfg);

/// Balanced starting factors (V0 = U0 D0) from the rank-d eigen-truncation.
FactorPair symmetric_init_from(const ParameterMatrix& theta0_full, Index d);

/// Try each step size and keep the one with the lowest final surrogate
/// objective. Only hub-observable quantities are used.
double grid_search_eta(const BinaryDataset& hub_data, const MatrixXd& correction, const MatrixXd& u0,
                       const MatrixXd& v0, const OptimizerConfig& cfg,
                       const std::vector<double>& candidates = {0.1, 0.15, 0.2, 0.25, 0.3});

} // namespace daniel
