#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "daniel/ising.hpp"

namespace daniel {

/// Spectral operator applied to the eigenvalues of a symmetric matrix.
/// Singular values of a symmetric matrix are |lambda|, so Soft/Hard/TopD act
/// on |lambda| and keep the sign.
struct SpectralOp {
    enum class Kind { Soft, Hard, TopD, PsdProject };

    Kind kind = Kind::PsdProject;
    double tau = 0.0;
    Index rank = 0;

    static SpectralOp soft(double tau);
    static SpectralOp hard(double tau);
    static SpectralOp top_d(Index d);
    static SpectralOp psd();
};

/// Stacked factors Z = [U; V], (2p) x d.
class StackedFactors {
public:
    explicit StackedFactors(MatrixXd z);
    explicit StackedFactors(const FactorPair& f);

    const MatrixXd& matrix() const noexcept { return z_; }
    Index half() const noexcept { return z_.rows() / 2; }
    auto u() const { return z_.topRows(half()); }
    auto v() const { return z_.bottomRows(half()); }

private:
    MatrixXd z_;
};

/// Eigen-decomposition of the symmetrized input; throws NumericError on failure.
template <typename Derived>
Eigen::SelfAdjointEigenSolver<Matrix<typename Derived::Scalar>> symmetric_eigen(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    require(m.rows() == m.cols(), "spectral: matrix must be square");
    if (!m.allFinite())
        throw NumericError("spectral: non-finite input");
    const Matrix<Scalar> sym = (m + m.transpose()) / Scalar(2);
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym);
    if (es.info() != Eigen::Success)
        throw NumericError("spectral: eigendecomposition failed");
    return es;
}

/// Indices of eigenvalues sorted by decreasing |lambda|; ties keep the
/// solver's order.
template <typename Scalar>
std::vector<Index> order_by_magnitude(const Vector<Scalar>& lambda) {
    std::vector<Index> idx(static_cast<std::size_t>(lambda.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Index a, Index b) { return std::abs(lambda(a)) > std::abs(lambda(b)); });
    return idx;
}

template <typename Derived>
Matrix<typename Derived::Scalar> apply_spectral(const Eigen::MatrixBase<Derived>& m, const SpectralOp& op) {
    using Scalar = typename Derived::Scalar;
    const auto es = symmetric_eigen(m);
    Vector<Scalar> lambda = es.eigenvalues();
    const Index p = lambda.size();
    const Scalar tau = static_cast<Scalar>(op.tau);

    switch (op.kind) {
    case SpectralOp::Kind::Soft:
        for (Index i = 0; i < p; ++i) {
            const Scalar mag = std::max(std::abs(lambda(i)) - tau, Scalar(0));
            lambda(i) = lambda(i) < Scalar(0) ? -mag : mag;
        }
        break;
    case SpectralOp::Kind::Hard:
        for (Index i = 0; i < p; ++i)
            if (!(std::abs(lambda(i)) > tau))
                lambda(i) = Scalar(0);
        break;
    case SpectralOp::Kind::TopD: {
        require(op.rank >= 1 && op.rank <= p, "apply_spectral: TopD rank out of range");
        const auto idx = order_by_magnitude(lambda);
        for (std::size_t k = static_cast<std::size_t>(op.rank); k < idx.size(); ++k)
            lambda(idx[k]) = Scalar(0);
        break;
    }
    case SpectralOp::Kind::PsdProject:
        lambda = lambda.cwiseMax(Scalar(0));
        break;
    }
    const auto& vecs = es.eigenvectors();
    Matrix<Scalar> out = vecs * lambda.asDiagonal() * vecs.transpose();
    // Reconstruction rounding can break exact symmetry.
    return (out + out.transpose()) / Scalar(2);
}

/// Largest singular value.
template <typename Derived>
typename Derived::Scalar operator_norm(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    if (m.size() == 0)
        return Scalar(0);
    Eigen::JacobiSVD<Matrix<Scalar>> svd(m.eval());
    return svd.singularValues()(0);
}

/// Balanced rank-d factors of a symmetric matrix: U0 = eigvec * sqrt|lambda|,
/// V0 = U0 * diag(sign lambda) with sign(0) = +1, keeping the d largest |lambda|.
struct RankDFactors {
    FactorPair factors;
    Vector<int> signs;
};

template <typename Scalar>
RankDFactors factorize_rank_d(const BasicParameterMatrix<Scalar>& theta0, Index d) {
    const Index p = theta0.dim();
    require(d >= 1 && d <= p, "factorize_rank_d: need 1 <= d <= p");
    const auto es = symmetric_eigen(theta0.matrix());
    const Vector<Scalar>& lambda = es.eigenvalues();
    const auto idx = order_by_magnitude(lambda);

    Matrix<Scalar> u(p, d), v(p, d);
    Vector<int> signs(d);
    for (Index k = 0; k < d; ++k) {
        const Index i = idx[static_cast<std::size_t>(k)];
        const Scalar l = lambda(i);
        signs(k) = l < Scalar(0) ? -1 : 1;
        u.col(k) = es.eigenvectors().col(i) * std::sqrt(std::abs(l));
        v.col(k) = u.col(k) * Scalar(signs(k));
    }
    return RankDFactors{FactorPair(std::move(u), std::move(v)), std::move(signs)};
}

/// Overload for raw matrices: refuses inputs that are not symmetric.
template <typename Derived>
RankDFactors factorize_rank_d(const Eigen::MatrixBase<Derived>& theta0, Index d) {
    require(theta0.rows() == theta0.cols(), "factorize_rank_d: matrix must be square");
    const auto scale = std::max<typename Derived::Scalar>(1, theta0.cwiseAbs().maxCoeff());
    if ((theta0 - theta0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw ContractError("factorize_rank_d: matrix is not symmetric");
    return factorize_rank_d(ParameterMatrix(theta0), d);
}

/// Squared subspace distance min_O ||Z1 - Z2 O||_F^2 over orthogonal O.
double procrustes_distance(const StackedFactors& z1, const StackedFactors& z2);

/// The minimizing orthogonal matrix O* = A B^T where Z2^T Z1 = A S B^T.
MatrixXd procrustes_rotation(const StackedFactors& z1, const StackedFactors& z2);

/// Numerical rank: count of |lambda| above `cutoff` for a symmetric matrix.
Index numerical_rank(const MatrixXd& m, double cutoff = 1e-10);

} // namespace daniel
