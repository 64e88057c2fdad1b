#include "csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lfboot/error.hpp"

namespace lfboot::cli {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

TimeSeries read_series(const std::filesystem::path& path, const ReadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());

    std::vector<double> t, x;
    std::size_t columns = 0;
    std::string line;
    std::size_t line_no = 0;
    bool first_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        std::vector<std::optional<double>> nums;
        for (const auto& c : cells) nums.push_back(parse_number(c));
        const bool numeric = std::all_of(nums.begin(), nums.end(), [](const auto& v) { return v.has_value(); });
        if (first_row) {
            first_row = false;
            columns = cells.size();
            if (!numeric) continue;  // header
        }
        if (cells.size() != columns) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(columns) + " columns");
        }
        if (!numeric) throw DataError(path.string() + ":" + std::to_string(line_no) + ": non-numeric value");
        if (columns == 1) {
            x.push_back(*nums[0]);
        } else {
            t.push_back(*nums[0]);
            x.push_back(*nums[1]);
        }
    }
    if (x.size() < 6) {
        throw DataError(path.string() + ": need at least 6 observations, got " + std::to_string(x.size()));
    }
    if (opts.log) {
        for (auto& v : x) {
            if (!(v > 0.0)) throw DataError(path.string() + ": --log requires positive values");
            v = std::log(v);
        }
    }

    const double n = static_cast<double>(x.size() - 1);
    double delta = opts.delta.value_or(1.0 / n);
    if (!t.empty()) {
        delta = (t.back() - t.front()) / n;
        if (!(delta > 0.0)) throw DataError(path.string() + ": timestamps must be increasing");
        for (std::size_t i = 1; i < t.size(); ++i) {
            if (std::abs((t[i] - t[i - 1]) - delta) > 1e-9 * delta) {
                throw DataError(path.string() + ": timestamps are not equidistant at row " + std::to_string(i + 1));
            }
        }
    }
    return TimeSeries(std::move(x), delta, path.filename().string());
}

std::vector<std::filesystem::path> list_inputs(const std::filesystem::path& input) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::exists(input, ec)) throw DataError("input not found: " + input.string());
    if (!fs::is_directory(input, ec)) return {input};
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    if (files.empty()) throw DataError("no .csv files in " + input.string());
    return files;
}

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace lfboot::cli
