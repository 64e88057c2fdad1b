#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lfboot/powervar.hpp"

namespace lfboot::cli {

struct ReadOptions {
    /// Grid spacing for one-column input; 1/n when absent.
    std::optional<double> delta;
    /// Apply the natural log elementwise before anything else.
    bool log = false;
};

/// Reads a series from CSV. One column holds values; with two or more columns
/// the first two are t and value and t must be equidistant (1e-9 relative).
/// A non-numeric first row is treated as a header. Throws DataError.
TimeSeries read_series(const std::filesystem::path& path, const ReadOptions& opts = {});

/// The .csv files of a directory sorted by file name, or the path itself.
std::vector<std::filesystem::path> list_inputs(const std::filesystem::path& input);

/// %.17g
std::string format_double(double v);

/// Writes to a sibling temporary file and renames it over `path`.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

}  // namespace lfboot::cli
