#include "daniel/baselines.hpp"

#include <chrono>
#include <cmath>

namespace daniel {

BaselineMethod BaselineMethod::sv_soft(double tau) {
    require(tau >= 0.0 && std::isfinite(tau), "BaselineMethod: tau must be >= 0");
    return {Kind::SvSoft, tau, 0};
}

BaselineMethod BaselineMethod::sv_hard(double tau) {
    require(tau >= 0.0 && std::isfinite(tau), "BaselineMethod: tau must be >= 0");
    return {Kind::SvHard, tau, 0};
}

BaselineMethod BaselineMethod::sv_topd(Index d) {
    require(d >= 1, "BaselineMethod: d must be >= 1");
    return {Kind::SvTopd, 0.0, d};
}

BaselineMethod BaselineMethod::psd_cvx() { return {Kind::PsdCvx, 0.0, 0}; }

SpectralOp BaselineMethod::spectral_op() const {
    switch (kind) {
    case Kind::SvSoft: return SpectralOp::soft(tau);
    case Kind::SvHard: return SpectralOp::hard(tau);
    case Kind::SvTopd: return SpectralOp::top_d(rank);
    case Kind::PsdCvx: return SpectralOp::psd();
    }
    throw ContractError("BaselineMethod: unknown kind");
}

std::string BaselineMethod::name() const {
    switch (kind) {
    case Kind::SvSoft: return "SvSoft";
    case Kind::SvHard: return "SvHard";
    case Kind::SvTopd: return "SvTopd";
    case Kind::PsdCvx: return "PsdCvx";
    }
    return "?";
}

GradientSource::GradientSource(Mode mode, BinaryDataset data, MatrixXd correction)
    : mode_(mode), data_(std::move(data)), correction_(std::move(correction)) {}

GradientSource GradientSource::centralized(BinaryDataset full_data) {
    const Index p = full_data.p();
    return GradientSource(Mode::Centralized, std::move(full_data), MatrixXd::Zero(p, p));
}

GradientSource GradientSource::surrogate(BinaryDataset hub_data, MatrixXd correction) {
    require(correction.rows() == hub_data.p() && correction.cols() == hub_data.p(),
            "GradientSource: correction must be p x p");
    return GradientSource(Mode::Surrogate, std::move(hub_data), std::move(correction));
}

MatrixXd GradientSource::gradient(const ParameterMatrix& theta) const {
    require(theta.dim() == p(), "GradientSource::gradient: dimension mismatch");
    if (mode_ == Mode::Centralized)
        return pseudo_nll_grad(theta, data_);
    return pseudo_nll_grad(theta, data_) + correction_;
}

ParameterMatrix baseline_step(const ParameterMatrix& theta_prev, const GradientSource& src,
                              const BaselineMethod& method, double eta) {
    require(eta >= 0.0 && std::isfinite(eta), "baseline_step: eta must be >= 0");
    const MatrixXd g = src.gradient(theta_prev);
    const MatrixXd step = theta_prev.matrix() - eta * g;
    return ParameterMatrix(apply_spectral(step, method.spectral_op()));
}

FitResult baseline_fit(const GradientSource& src, const BaselineMethod& method, const OptimizerConfig& cfg) {
    cfg.validate();
    const Index p = src.p();
    require(cfg.d <= p, "baseline_fit: d exceeds p");
    const auto start = std::chrono::steady_clock::now();

    ParameterMatrix theta = ParameterMatrix::zero(p);
    FitResult out;
    out.trace.reserve(static_cast<std::size_t>(cfg.gamma_max));
    for (int gamma = 1; gamma <= cfg.gamma_max; ++gamma) {
        ParameterMatrix next = baseline_step(theta, src, method, cfg.eta);
        if (next.matrix().cwiseAbs().maxCoeff() > kDivergenceBound)
            throw DivergenceError(gamma, "baseline iterate exceeds the divergence bound");
        const double delta = (next.matrix() - theta.matrix()).norm();
        out.trace.push_back(delta);
        out.iterations_used = gamma;
        theta = std::move(next);
        if (delta < cfg.tol)
            break;
    }
    out.factors = factorize_rank_d(theta, cfg.d).factors;
    out.theta_hat = std::move(theta);
    out.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace daniel
