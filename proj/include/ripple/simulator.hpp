#pragma once

#include "ripple/circuit.hpp"

#include <cstddef>
#include <string_view>
#include <vector>

namespace ripple {

enum class ProfileKind { Dc, Sine, Rect };

std::string_view to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(std::string_view name);

/// Parametric load current, discharge positive.
///
/// Sine: i_dc + i_ac*sin(2*pi*f*t).
/// Rect: peak-to-peak swing 2*i_ac split so the period mean stays i_dc, i.e.
/// high = i_dc + 2*i_ac*(1-duty), low = i_dc - 2*i_ac*duty. Edges are linear
/// ramps at `slew_rate`; the rising edge starts at phase zero and `duty` is the
/// high time measured between edge midpoints.
struct LoadProfile {
    ProfileKind kind = ProfileKind::Dc;
    double i_dc = 0.0;
    double i_ac = 0.0;
    double frequency = 0.0;
    double duty = 0.5;
    double slew_rate = 1e6; ///< [A/s]

    static LoadProfile dc(double i_dc);
    static LoadProfile sine(double i_dc, double i_ac, double frequency);
    static LoadProfile rect(double i_dc, double i_ac, double frequency, double duty = 0.5,
                            double slew_rate = 1e6);

    bool periodic() const { return kind != ProfileKind::Dc; }
    double period() const { return 1.0 / frequency; }
    double high_level() const;
    double low_level() const;

    void validate() const;
};

struct ProfileSample {
    double current = 0.0;
    double slope = 0.0; ///< di/dt [A/s]
};

ProfileSample sample_profile(const LoadProfile& profile, double t);

/// Uniformly sampled simulation output; all columns have equal length.
struct SimulationTrace {
    std::vector<double> time;
    std::vector<double> i_load;
    std::vector<double> v_terminal;
    std::vector<double> eta_ct;
    std::vector<double> i_int;
    std::vector<double> i_dl;
    std::vector<double> ageing_rate;

    std::size_t size() const { return time.size(); }
    void reserve(std::size_t n);
};

struct SimulationSettings {
    double dt = 0.0;
    double duration = 0.0;
    double start_time = 0.0;  ///< profile time of the first sample, for chained runs
    std::size_t stride = 1;   ///< keep every stride-th step
};

struct SimulationResult {
    SimulationTrace trace;
    CellState final_state;
    double end_time = 0.0;
};

/// min(period/500, 0.2 us); 0.2 us for DC.
double default_time_step(const LoadProfile& profile);

/// Largest step simulate() accepts: min(period/200, smallest R-C time constant/10).
double max_time_step(const LoadProfile& profile, const CellParams& p);

/// Classical fixed-step RK4 integration of the circuit under `profile`.
///
/// Throws ConfigError on step-size violations and NumericError (with the
/// offending time) when a kinetic exponent overflows.
SimulationResult simulate(const LoadProfile& profile, const CellParams& p,
                          const SimulationSettings& settings, const CellState& initial);

struct PeriodicOptions {
    double max_dt = 0.0;         ///< 0 selects default_time_step()
    double tolerance = 1e-6;     ///< relative change of the cycle-mean ageing rate
    std::size_t max_cycles = 10000;
    std::size_t trace_stride = 1; ///< 0 disables capture of the last cycle
};

struct PeriodicResult {
    CellState final_state;
    SimulationTrace last_cycle;
    std::size_t cycles = 0;
    bool converged = false;
    double residual = 0.0; ///< last relative change of the cycle-mean ageing rate
    double dt = 0.0;
    double reference_eta = 0.0;        ///< over-potential of dc_steady_state(i_dc)
    double mean_relative_ageing = 1.0; ///< cycle mean of rate(eta)/rate(reference_eta)
    double mean_ageing_rate = 0.0;     ///< cycle mean of lumped_ageing_rate
    double mean_i_load = 0.0;
    double mean_i_int = 0.0;
    double mean_eta = 0.0;
    double max_split_residual = 0.0;   ///< max |i_load - i_int - i_dl| over all steps
};

/// Integrates whole cycles from dc_steady_state(i_dc) until the cycle-mean
/// ageing rate settles. The step is period/ceil(period/max_dt) so every cycle
/// holds an integer number of steps.
PeriodicResult run_to_periodic_steady_state(const LoadProfile& profile, const CellParams& p,
                                            const PeriodicOptions& options = {});

} // namespace ripple
