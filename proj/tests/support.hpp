#pragma once

#include <cstdint>

#include "daniel/ising.hpp"
#include "daniel/rng.hpp"

namespace fixtures {

using namespace daniel;

inline MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
    const CounterRng rng(seed, 0xf1);
    MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j)
            m(i, j) = scale * rng.normal(static_cast<std::uint64_t>(i * cols + j));
    return m;
}

inline MatrixXd random_symmetric(Index p, std::uint64_t seed, double scale = 1.0) {
    const MatrixXd a = random_matrix(p, p, seed, scale);
    return (a + a.transpose()) / 2.0;
}

inline BinaryDataset random_dataset(Index n, Index p, std::uint64_t seed) {
    const CounterRng rng(seed, 0xda7a);
    SpinMatrix s(n, p);
    for (Index l = 0; l < n; ++l)
        for (Index j = 0; j < p; ++j)
            s(l, j) = rng.uniform(static_cast<std::uint64_t>(l * p + j)) < 0.5 ? -1 : 1;
    return BinaryDataset(std::move(s));
}

/// Central difference of f along the symmetric direction E_jk + E_kj (or E_jj).
template <typename F>
double symmetric_fd(F&& f, const MatrixXd& theta, Index j, Index k, double h = 1e-5) {
    MatrixXd plus = theta, minus = theta;
    plus(j, k) += h;
    minus(j, k) -= h;
    if (j != k) {
        plus(k, j) += h;
        minus(k, j) -= h;
    }
    return (f(plus) - f(minus)) / (2 * h);
}

} // namespace fixtures
