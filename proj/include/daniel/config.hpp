#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "daniel/optimize.hpp"

namespace daniel {

enum class Method { Daniel, SvSoft, SvHard, SvTopd, PsdCvx };

inline constexpr Method kAllMethods[] = {Method::Daniel, Method::SvSoft, Method::SvHard, Method::SvTopd,
                                         Method::PsdCvx};

const char* method_name(Method m) noexcept;
/// Accepts the canonical names case-insensitively ("DANIEL", "SvTopd", ...).
Method parse_method(const std::string& name);
/// Stable numeric id used in seed derivation.
std::uint64_t method_id(Method m) noexcept;

/// Experiment grid. Text form is one "key = value" per line, lists as
/// "[a, b, c]", '#' starts a comment.
struct ExperimentConfig {
    std::vector<Index> p_list{50};
    std::vector<Index> n_list{1000};
    std::vector<double> x_list{0.0};
    /// Explicit rank; when unset d = max(1, round(d_ratio * p)).
    std::optional<Index> d;
    double d_ratio = 0.1;
    std::vector<Method> methods{Method::Daniel};
    int reps = 200;
    std::uint64_t base_seed = 20240101;
    OptimizerConfig optimizer;
    /// Step sizes tried by the hub for DANIEL; empty means optimizer.eta.
    std::vector<double> eta_grid;
    double sv_tau = 1e-3;
    int burn_in = 200;
    std::string output_path = "results.csv";

    Index d_for(Index p) const;
    void validate() const;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    std::string serialize() const;

    bool operator==(const ExperimentConfig&) const;
};

} // namespace daniel
