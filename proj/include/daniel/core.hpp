#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace daniel {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Spins are stored as signed bytes; every entry is -1 or +1.
using SpinVector = Eigen::Matrix<std::int8_t, Eigen::Dynamic, 1>;
using SpinMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (bad index, shape mismatch, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Decomposition failure or a non-finite quantity.
class NumericError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public NumericError {
public:
    DivergenceError(int iteration, const std::string& what)
        : NumericError("diverged at iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

class IoError : public Error {
public:
    using Error::Error;
};

inline void require(bool ok, const char* what) {
    if (!ok)
        throw ContractError(what);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.allFinite();
}

/// Stable log(1 + exp(q)).
template <typename Scalar>
Scalar softplus(Scalar q) {
    using std::abs;
    using std::exp;
    using std::log1p;
    return (q > Scalar(0) ? q : Scalar(0)) + log1p(exp(-abs(q)));
}

/// exp(q) / (exp(q) + 1) without overflow.
template <typename Scalar>
Scalar logistic(Scalar q) {
    using std::exp;
    if (q >= Scalar(0))
        return Scalar(1) / (Scalar(1) + exp(-q));
    const Scalar e = exp(q);
    return e / (Scalar(1) + e);
}

} // namespace daniel
