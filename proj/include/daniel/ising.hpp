#pragma once

#include <initializer_list>
#include <string>
#include <utility>

#include "daniel/core.hpp"

namespace daniel {

/// One observation: p spins in {-1, +1}.
class BinarySample {
public:
    BinarySample() = default;
    explicit BinarySample(SpinVector values);
    BinarySample(std::initializer_list<int> values);

    Index size() const noexcept { return values_.size(); }
    int operator[](Index j) const { return values_[j]; }
    const SpinVector& values() const noexcept { return values_; }

    /// Copy with coordinate j negated.
    BinarySample flipped(Index j) const;
    /// Copy with coordinate j set to `value` (must be -1 or +1).
    BinarySample with(Index j, int value) const;

    template <typename Scalar>
    Vector<Scalar> as() const {
        return values_.template cast<Scalar>();
    }

private:
    SpinVector values_;
};

/// n samples sharing dimension p, stored row-major as signed bytes.
class BinaryDataset {
public:
    BinaryDataset() = default;
    explicit BinaryDataset(SpinMatrix spins);

    Index n() const noexcept { return spins_.rows(); }
    Index p() const noexcept { return spins_.cols(); }
    bool empty() const noexcept { return spins_.rows() == 0; }

    const SpinMatrix& spins() const noexcept { return spins_; }
    BinarySample sample(Index l) const;

    /// Contiguous block of `count` samples starting at `first`.
    BinaryDataset slice(Index first, Index count) const;
    static BinaryDataset concat(const BinaryDataset& a, const BinaryDataset& b);

    template <typename Scalar>
    Matrix<Scalar> as() const {
        return spins_.template cast<Scalar>();
    }

    friend bool operator==(const BinaryDataset& a, const BinaryDataset& b) {
        return a.spins_.rows() == b.spins_.rows() && a.spins_.cols() == b.spins_.cols() &&
               a.spins_ == b.spins_;
    }

private:
    SpinMatrix spins_;
};

/// Symmetric p x p interaction matrix. Any input is symmetrized as (M + M^T)/2.
template <typename Scalar>
class BasicParameterMatrix {
public:
    using MatrixType = Matrix<Scalar>;

    BasicParameterMatrix() = default;

    template <typename Derived>
    explicit BasicParameterMatrix(const Eigen::MatrixBase<Derived>& m) {
        require(m.rows() == m.cols(), "ParameterMatrix: matrix must be square");
        if (!m.allFinite())
            throw NumericError("ParameterMatrix: non-finite entry");
        entries_ = (m + m.transpose()) / Scalar(2);
    }

    static BasicParameterMatrix zero(Index p) {
        return BasicParameterMatrix(MatrixType::Zero(p, p));
    }

    Index dim() const noexcept { return entries_.rows(); }
    Scalar operator()(Index j, Index k) const { return entries_(j, k); }
    const MatrixType& matrix() const noexcept { return entries_; }

private:
    MatrixType entries_;
};

using ParameterMatrix = BasicParameterMatrix<double>;

/// Bi-factors (U, V), each p x d, with Theta = U V^T.
template <typename Scalar>
struct BasicFactorPair {
    Matrix<Scalar> u;
    Matrix<Scalar> v;

    BasicFactorPair() = default;
    BasicFactorPair(Matrix<Scalar> u_, Matrix<Scalar> v_) : u(std::move(u_)), v(std::move(v_)) {
        require(u.rows() == v.rows() && u.cols() == v.cols(), "FactorPair: U and V must have identical shape");
    }

    Index dim() const noexcept { return u.rows(); }
    Index rank() const noexcept { return u.cols(); }
    Matrix<Scalar> product() const { return u * v.transpose(); }
};

using FactorPair = BasicFactorPair<double>;

// ---------------------------------------------------------------------------
// Pseudo-likelihood kernels. Column q of theta feeds the local field of spin q.

/// Q_q = 2 theta_qq x_q + 2 sum_{j != q} theta_jq x_q x_j.
template <typename Derived>
typename Derived::Scalar local_field(const Eigen::MatrixBase<Derived>& theta, const BinarySample& x, Index q) {
    using Scalar = typename Derived::Scalar;
    const Index p = theta.rows();
    require(theta.cols() == p && x.size() == p, "local_field: dimension mismatch");
    if (q < 0 || q >= p)
        throw ContractError("local_field: feature index out of range");
    Scalar s = theta(q, q);
    for (Index j = 0; j < p; ++j)
        if (j != q)
            s += theta(j, q) * Scalar(x[j]);
    return Scalar(2) * Scalar(x[q]) * s;
}

/// P(X_j = x_j | X_{-j} = x_{-j}).
template <typename Derived>
typename Derived::Scalar conditional_prob(const Eigen::MatrixBase<Derived>& theta, const BinarySample& x, Index j) {
    return logistic(local_field(theta, x, j));
}

/// All local fields at once: n x p matrix with entry (l, q) = Q_{q,l}.
template <typename Derived>
Matrix<typename Derived::Scalar> local_fields(const Eigen::MatrixBase<Derived>& theta, const BinaryDataset& data) {
    using Scalar = typename Derived::Scalar;
    require(theta.rows() == data.p() && theta.cols() == data.p(), "local_fields: dimension mismatch");
    const Matrix<Scalar> x = data.as<Scalar>();
    Matrix<Scalar> h = x * theta;
    const Vector<Scalar> diag = theta.diagonal();
    // h(l,q) currently includes theta_qq x_q; replace it by theta_qq.
    for (Index q = 0; q < x.cols(); ++q)
        h.col(q) += diag(q) * (Vector<Scalar>::Ones(x.rows()) - x.col(q));
    return Scalar(2) * x.cwiseProduct(h);
}

/// Negative mean conditional log-likelihood over the dataset it is handed.
template <typename Derived>
typename Derived::Scalar pseudo_nll(const Eigen::MatrixBase<Derived>& theta, const BinaryDataset& data) {
    using Scalar = typename Derived::Scalar;
    require(!data.empty(), "pseudo_nll: empty dataset");
    const Matrix<Scalar> q = local_fields(theta, data);
    // -(Q - log(e^Q + 1)) = softplus(-Q)
    Scalar total(0);
    for (Index l = 0; l < q.rows(); ++l)
        for (Index j = 0; j < q.cols(); ++j)
            total += softplus(-q(l, j));
    return total / Scalar(data.n());
}

/// Closed-form gradient of the single-sample loss. Symmetric by construction.
template <typename Derived>
Matrix<typename Derived::Scalar> per_sample_grad(const Eigen::MatrixBase<Derived>& theta, const BinarySample& x) {
    using Scalar = typename Derived::Scalar;
    const Index p = theta.rows();
    require(theta.cols() == p && x.size() == p, "per_sample_grad: dimension mismatch");
    Vector<Scalar> b(p);
    for (Index q = 0; q < p; ++q)
        b(q) = -logistic(-local_field(theta, x, q));
    Matrix<Scalar> w(p, p);
    for (Index i = 0; i < p; ++i) {
        w(i, i) = Scalar(2) * Scalar(x[i]) * b(i);
        for (Index j = i + 1; j < p; ++j) {
            const Scalar v = Scalar(2) * Scalar(x[i] * x[j]) * (b(i) + b(j));
            w(i, j) = v;
            w(j, i) = v;
        }
    }
    return w;
}

/// Mean of per_sample_grad over the dataset, evaluated as two dense products.
template <typename Derived>
Matrix<typename Derived::Scalar> pseudo_nll_grad(const Eigen::MatrixBase<Derived>& theta, const BinaryDataset& data) {
    using Scalar = typename Derived::Scalar;
    if (data.empty())
        throw ContractError("pseudo_nll_grad: empty dataset");
    const Matrix<Scalar> x = data.as<Scalar>();
    Matrix<Scalar> xb = local_fields(theta, data);
    // xb <- x .* B with B = -1 / (1 + exp(Q))
    for (Index j = 0; j < xb.cols(); ++j)
        for (Index l = 0; l < xb.rows(); ++l)
            xb(l, j) = -logistic(-xb(l, j)) * x(l, j);
    const Matrix<Scalar> c = xb.transpose() * x;
    const Scalar scale = Scalar(2) / Scalar(data.n());
    Matrix<Scalar> g = scale * (c + c.transpose());
    g.diagonal() = scale * xb.colwise().sum().transpose();
    return g;
}

// ParameterMatrix conveniences.
template <typename Scalar>
Scalar local_field(const BasicParameterMatrix<Scalar>& theta, const BinarySample& x, Index q) {
    return local_field(theta.matrix(), x, q);
}
template <typename Scalar>
Scalar conditional_prob(const BasicParameterMatrix<Scalar>& theta, const BinarySample& x, Index j) {
    return conditional_prob(theta.matrix(), x, j);
}
template <typename Scalar>
Scalar pseudo_nll(const BasicParameterMatrix<Scalar>& theta, const BinaryDataset& data) {
    require(theta.dim() == data.p(), "pseudo_nll: dimension mismatch");
    return pseudo_nll(theta.matrix(), data);
}
template <typename Scalar>
Matrix<Scalar> per_sample_grad(const BasicParameterMatrix<Scalar>& theta, const BinarySample& x) {
    return per_sample_grad(theta.matrix(), x);
}
template <typename Scalar>
Matrix<Scalar> pseudo_nll_grad(const BasicParameterMatrix<Scalar>& theta, const BinaryDataset& data) {
    require(theta.dim() == data.p(), "pseudo_nll_grad: dimension mismatch");
    return pseudo_nll_grad(theta.matrix(), data);
}

} // namespace daniel
