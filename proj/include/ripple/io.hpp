#pragma once

#include "ripple/ageing.hpp"
#include "ripple/config.hpp"
#include "ripple/regression.hpp"
#include "ripple/simulator.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ripple {

/// Column-oriented numeric table with string metadata.
struct Table {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data; ///< one vector per column

    std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
    const std::vector<double>& column(std::string_view name) const;
    const std::string* find_meta(std::string_view key) const;
};

/// 17 significant digits, shortest %g form.
std::string format_number(double value);

/// CSV: `# key=value` metadata comments, a header row, then RFC-4180 rows.
std::string to_csv(const Table& table);
/// JSON: {"meta": {...}, "columns": {"name": [...], ...}} with columns in table order.
std::string to_json(const Table& table);
std::string render(const Table& table, OutputFormat format);

/// Parse either format; JSON is detected by a leading '{'.
Table parse_table(std::string_view text, std::string_view source = "<input>");
Table read_table(const std::filesystem::path& path);

/// Write to a sibling temporary file and rename it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

Table trace_table(const SimulationTrace& trace);
Table ap_curve_table(const ApCurve& curve);
ApCurve ap_curve_from_table(const Table& table);
MeasuredTrace measured_trace_from_table(const Table& table);

} // namespace ripple
