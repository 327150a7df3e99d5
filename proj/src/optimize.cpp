#include "daniel/optimize.hpp"

#include <chrono>
#include <cmath>
#include <utility>

#include "daniel/spectral.hpp"

namespace daniel {

OptimizerConfig OptimizerConfig::large_p(Index d) {
    OptimizerConfig cfg;
    cfg.eta = 0.01;
    cfg.gamma_max = 200;
    cfg.d = d;
    return cfg;
}

void OptimizerConfig::validate() const {
    require(eta > 0.0 && std::isfinite(eta), "OptimizerConfig: eta must be > 0");
    require(gamma_max >= 1, "OptimizerConfig: gamma_max must be >= 1");
    require(tol >= 0.0, "OptimizerConfig: tol must be >= 0");
    require(!lambda || *lambda >= 0.0, "OptimizerConfig: lambda must be >= 0");
    require(init_steps >= 0, "OptimizerConfig: init_steps must be >= 0");
    require(ball_radius > 0.0, "OptimizerConfig: ball_radius must be > 0");
    require(d >= 1, "OptimizerConfig: d must be >= 1");
}

double OptimizerConfig::resolved_lambda(Index p, Index n_hub) const {
    if (lambda)
        return *lambda;
    const double pd = static_cast<double>(p);
    return std::sqrt(pd * std::log(pd) / static_cast<double>(n_hub));
}

ParameterMatrix convex_init(const BinaryDataset& hub_data, const OptimizerConfig& cfg) {
    require(cfg.init_steps >= 0, "convex_init: init_steps must be >= 0");
    const Index p = hub_data.p();
    const double shrink = cfg.eta * cfg.resolved_lambda(p, hub_data.n());

    MatrixXd m = MatrixXd::Zero(p, p);
    for (int s = 0; s < cfg.init_steps; ++s) {
        m -= cfg.eta * pseudo_nll_grad(m, hub_data);
        m = apply_spectral(m, SpectralOp::soft(shrink));
        if (std::isfinite(cfg.ball_radius)) {
            const double norm = m.norm();
            if (norm > cfg.ball_radius)
                m *= cfg.ball_radius / norm;
        }
    }
    return ParameterMatrix(m);
}

MatrixXd surrogate_gradient_theta(const ParameterMatrix& theta, const BinaryDataset& hub_data,
                                  const MatrixXd& correction) {
    require(correction.rows() == theta.dim() && correction.cols() == theta.dim(),
            "surrogate_gradient_theta: correction shape mismatch");
    return pseudo_nll_grad(theta, hub_data) + correction;
}

double surrogate_objective(const FactorPair& f, const BinaryDataset& hub_data, const MatrixXd& correction) {
    const MatrixXd theta = f.product();
    require(correction.rows() == theta.rows() && correction.cols() == theta.cols(),
            "surrogate_objective: correction shape mismatch");
    const MatrixXd pi = f.u.transpose() * f.u - f.v.transpose() * f.v;
    return pseudo_nll(ParameterMatrix(theta), hub_data) + correction.cwiseProduct(theta).sum() +
           0.25 * pi.squaredNorm();
}

namespace {

void check_bounded(const MatrixXd& m, int iteration, const char* what) {
    if (!m.allFinite())
        throw DivergenceError(iteration, std::string(what) + " has a non-finite entry");
    if (m.size() > 0 && m.cwiseAbs().maxCoeff() > kDivergenceBound)
        throw DivergenceError(iteration, std::string(what) + " exceeds the divergence bound");
}

/// G V and G^T U for G = grad L(sym(U V^T)) + correction, without forming G.
/// Costs O(n p d) per call instead of the O(n p^2) of the dense gradient.
class FactoredGradient {
public:
    FactoredGradient(const BinaryDataset& data, const MatrixXd& correction)
        : x_(data.as<double>()), correction_(correction), scale_(2.0 / static_cast<double>(data.n())) {}

    std::pair<MatrixXd, MatrixXd> operator()(const MatrixXd& u, const MatrixXd& v) const {
        const Index d = u.cols();
        // Both factor products in one pass: w = [V U], xw = X w.
        MatrixXd w(u.rows(), 2 * d);
        w << v, u;
        const MatrixXd xw = x_ * w;
        // Local fields at sym(U V^T), with theta_qq in place of theta_qq x_q.
        MatrixXd xb(x_.rows(), x_.cols());
        xb.noalias() = 0.5 * (xw.rightCols(d) * v.transpose() + xw.leftCols(d) * u.transpose());
        const VectorXd diag = u.cwiseProduct(v).rowwise().sum();
        for (Index q = 0; q < xb.cols(); ++q)
            for (Index l = 0; l < xb.rows(); ++l) {
                const double xq = x_(l, q);
                const double field = 2.0 * xq * (xb(l, q) + diag(q) * (1.0 - xq));
                xb(l, q) = -logistic(-field) * xq;
            }
        // G = s (C + C^T) off the diagonal and s * colsum(xb) on it, with C = xb^T X.
        const VectorXd col_sum = xb.colwise().sum().transpose();
        const VectorXd c_diag = xb.cwiseProduct(x_).colwise().sum().transpose();
        const VectorXd fix = scale_ * (col_sum - 2.0 * c_diag);
        MatrixXd gw(w.rows(), w.cols());
        gw.noalias() = xb.transpose() * xw;
        gw.noalias() += x_.transpose() * (xb * w);
        gw *= scale_;
        gw += fix.asDiagonal() * w;
        return {gw.leftCols(d) + correction_ * v, gw.rightCols(d) + correction_.transpose() * u};
    }

private:
    MatrixXd x_;
    const MatrixXd& correction_;
    double scale_;
};

FitResult factored_descent(const MatrixXd& u0, const MatrixXd& v0, const OptimizerConfig& cfg,
                           const FactoredGradient& grad) {
    cfg.validate();
    require(u0.rows() == v0.rows() && u0.cols() == v0.cols(), "fit: factor shape mismatch");
    const auto start = std::chrono::steady_clock::now();

    MatrixXd u = u0;
    MatrixXd v = v0;
    MatrixXd prev = u * v.transpose();
    FitResult out;
    out.trace.reserve(static_cast<std::size_t>(cfg.gamma_max));

    for (int gamma = 1; gamma <= cfg.gamma_max; ++gamma) {
        const auto [gv, gu] = grad(u, v);
        const auto [bu, bv] = balance_gradient(u, v);
        MatrixXd u_next = u - cfg.eta * (gv + bu);
        MatrixXd v_next = v - cfg.eta * (gu + bv);
        check_bounded(u_next, gamma, "U");
        check_bounded(v_next, gamma, "V");

        MatrixXd cur = u_next * v_next.transpose();
        const double delta = (cur - prev).norm();
        out.trace.push_back(delta);
        out.iterations_used = gamma;
        u = std::move(u_next);
        v = std::move(v_next);
        prev = std::move(cur);
        if (delta < cfg.tol)
            break;
    }
    out.theta_hat = ParameterMatrix(prev);
    out.factors = FactorPair(std::move(u), std::move(v));
    out.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace

FitResult daniel_fit(const BinaryDataset& hub_data, const MatrixXd& correction, const MatrixXd& u0,
                     const MatrixXd& v0, const OptimizerConfig& cfg) {
    const Index p = hub_data.p();
    require(correction.rows() == p && correction.cols() == p, "daniel_fit: correction shape mismatch");
    require(u0.rows() == p, "daniel_fit: factor shape mismatch");
    return factored_descent(u0, v0, cfg, FactoredGradient(hub_data, correction));
}

FitResult centralized_fit(const BinaryDataset& data, const MatrixXd& u0, const MatrixXd& v0,
                          const OptimizerConfig& cfg) {
    const Index p = data.p();
    require(u0.rows() == p, "centralized_fit: factor shape mismatch");
    const MatrixXd none = MatrixXd::Zero(p, p);
    return factored_descent(u0, v0, cfg, FactoredGradient(data, none));
}

FactorPair symmetric_init_from(const ParameterMatrix& theta0_full, Index d) {
    return factorize_rank_d(theta0_full, d).factors;
}

double grid_search_eta(const BinaryDataset& hub_data, const MatrixXd& correction, const MatrixXd& u0,
                       const MatrixXd& v0, const OptimizerConfig& cfg, const std::vector<double>& candidates) {
    require(!candidates.empty(), "grid_search_eta: no candidates");
    double best_eta = candidates.front();
    double best = std::numeric_limits<double>::infinity();
    for (double eta : candidates) {
        OptimizerConfig trial = cfg;
        trial.eta = eta;
        try {
            const FitResult r = daniel_fit(hub_data, correction, u0, v0, trial);
            const double score = surrogate_objective(r.factors, hub_data, correction);
            if (score < best) {
                best = score;
                best_eta = eta;
            }
        } catch (const DivergenceError&) {
            // candidate rejected
        }
    }
    return best_eta;
}

} // namespace daniel
