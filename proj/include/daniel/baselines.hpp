#pragma once

#include <string>

#include "daniel/optimize.hpp"
#include "daniel/spectral.hpp"

namespace daniel {

/// Convex comparators: a gradient step followed by a spectral operator.
struct BaselineMethod {
    enum class Kind { SvSoft, SvHard, SvTopd, PsdCvx };

    Kind kind = Kind::SvTopd;
    double tau = 1e-3;
    Index rank = 1;

    static BaselineMethod sv_soft(double tau = 1e-3);
    static BaselineMethod sv_hard(double tau = 1e-3);
    static BaselineMethod sv_topd(Index d);
    static BaselineMethod psd_cvx();

    SpectralOp spectral_op() const;
    std::string name() const;
};

/// Where the Theta-gradient comes from: the pooled data, or the hub data plus
/// the one-shot correction.
class GradientSource {
public:
    enum class Mode { Centralized, Surrogate };

    static GradientSource centralized(BinaryDataset full_data);
    static GradientSource surrogate(BinaryDataset hub_data, MatrixXd correction);

    Mode mode() const noexcept { return mode_; }
    Index p() const noexcept { return data_.p(); }
    const BinaryDataset& data() const noexcept { return data_; }
    const MatrixXd& correction() const noexcept { return correction_; }

    MatrixXd gradient(const ParameterMatrix& theta) const;

private:
    GradientSource(Mode mode, BinaryDataset data, MatrixXd correction);

    Mode mode_;
    BinaryDataset data_;
    MatrixXd correction_;
};

ParameterMatrix baseline_step(const ParameterMatrix& theta_prev, const GradientSource& src,
                              const BaselineMethod& method, double eta);

/// Iterates baseline_step from zero under the shared stopping rule. The
/// returned factors are the rank-cfg.d truncation of the final estimate.
FitResult baseline_fit(const GradientSource& src, const BaselineMethod& method, const OptimizerConfig& cfg);

} // namespace daniel
