#pragma once

#include "ripple/config.hpp"
#include "ripple/regression.hpp"
#include "ripple/simulator.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ripple::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

struct Context {
    RunConfig config;
    std::optional<std::filesystem::path> out; ///< file destination; stream output otherwise
    unsigned jobs = 0;
    bool verbose = false;
    std::ostream* stdout_stream = nullptr;
    std::ostream* stderr_stream = nullptr;

    std::ostream& output() const;
    std::ostream& log() const;
    OutputFormat format() const { return config.output.format; }
};

/// Rows (f, Re Z, Im Z, |Z|, phase, high-pass approximation).
int cmd_impedance(const Context& ctx, std::span<const double> freqs, double bias_eta);

struct SimulateRequest {
    LoadProfile profile;
    double duration = 0.0;
    double dt = 0.0; ///< 0 selects default_time_step()
    std::size_t stride = 1;
    bool from_rest = false; ///< start from the zero state instead of dc_steady_state(i_dc)
};

int cmd_simulate(const Context& ctx, const SimulateRequest& request);
int cmd_sweep(const Context& ctx);
/// Exit code 0 iff the fit converged.
int cmd_fit_ap(const Context& ctx, const std::filesystem::path& curve_file);

struct FitCircuitRequest {
    std::filesystem::path trace_file;
    std::vector<CircuitParameter> free_parameters{kIdentifiableParameters.begin(), kIdentifiableParameters.end()};
    std::optional<double> initial_current;
    std::size_t max_evaluations = 5000;
};

/// Writes the identified cell as a config file; exit code 3 if not converged.
int cmd_fit_circuit(const Context& ctx, const FitCircuitRequest& request);

/// Full command line front end; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace ripple::cli
