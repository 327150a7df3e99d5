#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "daniel/config.hpp"

namespace daniel {

struct ResultRow {
    Method method = Method::Daniel;
    Index p = 0;
    Index d = 0;
    Index n = 0;
    double x = 0.0;
    Index m = 1;
    int rep = 0;
    /// NaN when the fit diverged.
    double frob_err = 0.0;
    double subspace_err = 0.0;
    int iterations = 0;
    double wall_time_ms = 0.0;
    std::uint64_t seed = 0;
    bool diverged = false;
    /// max |P - P^T| of the raw factor product U V^T; kept in memory only.
    double asymmetry = 0.0;
};

inline constexpr const char* kCsvHeader =
    "method,p,d,n,x,m,rep,frob_err,subspace_err,iterations,wall_time_ms,seed";

std::uint64_t cell_seed(std::uint64_t base_seed, Index p, Index n, double x, Method method, int rep);

/// One simulation: ground truth, Gibbs data, partition, one-shot round, fit, metrics.
ResultRow run_cell(const ExperimentConfig& cfg, Index p, Index d, Index n, double x, Method method, int rep);

struct GridOptions {
    unsigned jobs = 1;
    /// Called after each finished cell with (done, total).
    std::function<void(std::size_t, std::size_t)> progress;
};

/// Every grid cell times reps, sorted by (method, p, n, x, rep).
std::vector<ResultRow> run_grid(const ExperimentConfig& cfg, const GridOptions& opts = {});

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// Writes through a temporary file; nothing is left behind on failure.
void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_csv(std::istream& in);

} // namespace daniel
