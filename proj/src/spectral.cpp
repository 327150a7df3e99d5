#include "daniel/spectral.hpp"

namespace daniel {

SpectralOp SpectralOp::soft(double tau) {
    require(tau >= 0.0 && std::isfinite(tau), "SpectralOp: tau must be finite and >= 0");
    return {Kind::Soft, tau, 0};
}

SpectralOp SpectralOp::hard(double tau) {
    require(tau >= 0.0 && std::isfinite(tau), "SpectralOp: tau must be finite and >= 0");
    return {Kind::Hard, tau, 0};
}

SpectralOp SpectralOp::top_d(Index d) {
    require(d >= 1, "SpectralOp: TopD rank must be >= 1");
    return {Kind::TopD, 0.0, d};
}

SpectralOp SpectralOp::psd() { return {Kind::PsdProject, 0.0, 0}; }

StackedFactors::StackedFactors(MatrixXd z) : z_(std::move(z)) {
    require(z_.rows() % 2 == 0, "StackedFactors: row count must be even");
}

StackedFactors::StackedFactors(const FactorPair& f) : z_(2 * f.dim(), f.rank()) {
    z_.topRows(f.dim()) = f.u;
    z_.bottomRows(f.dim()) = f.v;
}

MatrixXd procrustes_rotation(const StackedFactors& z1, const StackedFactors& z2) {
    const MatrixXd& a = z1.matrix();
    const MatrixXd& b = z2.matrix();
    require(a.rows() == b.rows() && a.cols() == b.cols(), "procrustes_distance: shape mismatch");
    Eigen::JacobiSVD<MatrixXd> svd(b.transpose() * a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

double procrustes_distance(const StackedFactors& z1, const StackedFactors& z2) {
    const MatrixXd o = procrustes_rotation(z1, z2);
    return (z1.matrix() - z2.matrix() * o).squaredNorm();
}

Index numerical_rank(const MatrixXd& m, double cutoff) {
    const auto es = symmetric_eigen(m);
    return (es.eigenvalues().array().abs() > cutoff).count();
}

} // namespace daniel
