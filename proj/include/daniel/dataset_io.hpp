#pragma once

#include <filesystem>
#include <iosfwd>

#include "daniel/ising.hpp"

namespace daniel {

enum class DatasetFormat { Text, Binary };

/// Text: "ISING-DATA v1 p=<p> n=<n>" then n lines of space-separated -1/1.
/// Binary: "ISD1", u32 p, u64 n, then n*p signed bytes.
void write_dataset(std::ostream& out, const BinaryDataset& data, DatasetFormat fmt = DatasetFormat::Text);
void write_dataset(const std::filesystem::path& path, const BinaryDataset& data,
                   DatasetFormat fmt = DatasetFormat::Text);

/// Reads either format; the leading bytes pick the parser.
BinaryDataset read_dataset(std::istream& in);
BinaryDataset read_dataset(const std::filesystem::path& path);

/// Theta dump: "DTH1", u32 p, then p*p f64 row-major.
void write_theta(const std::filesystem::path& path, const MatrixXd& theta);
MatrixXd read_theta(const std::filesystem::path& path);

} // namespace daniel
