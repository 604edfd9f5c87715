#pragma once

#include "ripple/circuit.hpp"
#include "ripple/simulator.hpp"

#include <span>
#include <string>
#include <vector>

namespace ripple {

struct ApPoint {
    double frequency = 0.0; ///< [Hz]
    double ap = 1.0;
};

struct ApCurveMeta {
    double i_dc = 0.0;
    double i_ac = 0.0;
    ProfileKind kind = ProfileKind::Sine;
    std::string cell_fingerprint;
};

/// Ageing potential against ripple frequency.
struct ApCurve {
    std::vector<ApPoint> points;
    ApCurveMeta meta;

    /// Frequencies strictly increasing and positive, AP finite and positive.
    void validate() const;
    std::vector<double> frequencies() const;
    std::vector<double> values() const;
};

/// AP(f) = a * exp(b / sqrt(c + f^2)).
struct ApModel {
    double a = 1.0;
    double b = 0.0; ///< [Hz]
    double c = 0.0; ///< [Hz^2]
};

struct SweepOptions {
    PeriodicOptions periodic{.max_dt = 0.0, .tolerance = 1e-6, .max_cycles = 10000, .trace_stride = 0};
    unsigned jobs = 0; ///< worker threads, 0 = hardware concurrency
};

/// Ratio of the cycle-mean side-reaction rate under a settled sinusoidal load
/// (i_dc + i_ac*sin) to the rate at dc_steady_state(i_dc). The ratio is
/// formed per sample, so the prefactor k_ag never enters the computation.
/// Throws ConvergenceError when the periodic steady state is not reached.
double ageing_potential_at(double f, double i_dc, double i_ac, const CellParams& p,
                           const PeriodicOptions& options = {.trace_stride = 0});

/// One ageing_potential_at() per frequency, run on `options.jobs` threads.
/// Results are ordered by frequency regardless of completion order.
ApCurve ageing_sweep(std::span<const double> freqs, double i_dc, double i_ac, const CellParams& p,
                     const SweepOptions& options = {});

double ap_model_eval(double f, const ApModel& m);

/// Logarithmic grid from f_min to f_max (both included) with the given density.
std::vector<double> log_frequency_grid(double f_min, double f_max, unsigned points_per_decade);

/// Stable hex digest of every cell parameter.
std::string cell_fingerprint(const CellParams& p);

} // namespace ripple
