#pragma once

#include "ripple/circuit.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

namespace ripple {

enum class OutputFormat { Csv, Json };

OutputFormat output_format_from_string(std::string_view name);
std::string_view to_string(OutputFormat format);

struct SweepSettings {
    double f_min = 1.0;
    double f_max = 1e5;
    unsigned points_per_decade = 40;
    double i_dc = 5.0;
    double i_ac = 5.0;
};

struct SimSettings {
    double dt = 0.0;         ///< 0 selects the profile default
    double duration = 0.02;
    double tolerance = 1e-6; ///< periodic steady-state tolerance
    std::size_t max_cycles = 10000;
};

struct OutputSettings {
    OutputFormat format = OutputFormat::Csv;
    std::string path;
    std::size_t stride = 1;
};

/// Everything a CLI run reads from its configuration file.
///
/// The file is INI-style: `[cell]`, `[sweep]`, `[sim]` and `[output]`
/// sections of `key = value` lines, `#` or `;` comments. Missing keys keep
/// their defaults, unknown keys are rejected.
struct RunConfig {
    CellParams cell;
    SweepSettings sweep;
    SimSettings sim;
    OutputSettings output;

    void validate() const;
};

/// Parse and validate. Errors are ConfigError with "<source>:<line>: ..." diagnostics.
RunConfig parse_config(std::string_view text, std::string_view source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Serialise with 17 significant digits; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& config);

} // namespace ripple
