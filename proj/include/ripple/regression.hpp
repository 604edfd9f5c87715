#pragma once

#include "ripple/ageing.hpp"
#include "ripple/circuit.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ripple {

// ---------------------------------------------------------------------------
// Ageing-potential model fit

struct ApFit {
    ApModel model;
    double r_squared = 0.0;      ///< linear AP space
    double residual_rms = 0.0;   ///< linear AP space
    double gradient_norm = 0.0;  ///< log space, |J_j . r| / (|J_j| |y - mean y|) over columns
    std::size_t iterations = 0;
    bool converged = false;
    bool degenerate = false;     ///< constant curve, fitted as b = 0
};

/// 1 - SS_res/SS_tot; 1 whenever SS_res is zero. Throws ConfigError on
/// empty or mismatched inputs.
double r_squared(std::span<const double> observed, std::span<const double> predicted);

/// Least-squares fit of AP = a*exp(b/sqrt(c + f^2)) in log space.
///
/// For fixed c the problem is linear in (ln a, b), so c is profiled: a log
/// grid, golden-section refinement, then a damped Gauss-Newton polish of all
/// three parameters. Needs at least 4 points with AP > 0.
ApFit fit_ap_model(const ApCurve& curve);

// ---------------------------------------------------------------------------
// Circuit parameter identification

enum class CircuitParameter {
    R0,
    L0,
    RSei,
    CSei,
    CDl,
    RW1,
    CW1,
    RW2,
    CW2,
    ExchangeCurrent,
    TransferCoeff,
};

inline constexpr std::array kIdentifiableParameters{
    CircuitParameter::R0,  CircuitParameter::L0,  CircuitParameter::RSei,
    CircuitParameter::CSei, CircuitParameter::CDl, CircuitParameter::RW1,
    CircuitParameter::CW1, CircuitParameter::RW2, CircuitParameter::CW2,
    CircuitParameter::ExchangeCurrent, CircuitParameter::TransferCoeff,
};

std::string_view parameter_name(CircuitParameter param);
std::optional<CircuitParameter> parameter_from_name(std::string_view name);
double get_parameter(const CellParams& p, CircuitParameter param);
void set_parameter(CellParams& p, CircuitParameter param, double value);

/// Uniformly sampled (t, i, v) record.
struct MeasuredTrace {
    std::vector<double> time;
    std::vector<double> current;
    std::vector<double> voltage;

    /// Equal lengths, at least two samples, uniform spacing (1e-6 relative).
    void validate() const;
    double dt() const;
};

struct ParameterBounds {
    double lower = 0.0;
    double upper = 0.0;
};

using BoundsMap = std::map<CircuitParameter, ParameterBounds>;

enum class SearchStrategy {
    MarquardtFirst, ///< Levenberg-Marquardt, simplex only if it runs out of progress
    SimplexFirst,   ///< Nelder-Mead, then a Levenberg-Marquardt polish
};

struct IdentOptions {
    SearchStrategy strategy = SearchStrategy::MarquardtFirst;
    std::vector<CircuitParameter> free_parameters{kIdentifiableParameters.begin(),
                                                  kIdentifiableParameters.end()};
    std::size_t max_evaluations = 5000;
    std::size_t simplex_evaluations = 2000; ///< simplex budget under SimplexFirst
    double simplex_tolerance = 1e-8;        ///< log-space vertex spread
    double initial_step = 0.1;              ///< log-space simplex edge
    bool polish = true;                     ///< SimplexFirst: run the Levenberg-Marquardt stage
    std::optional<double> initial_current;  ///< DC preconditioning current; default first sample
};

struct IdentResult {
    CellParams params;
    double rmse_voltage = 0.0;
    std::map<CircuitParameter, bool> bounds_hit;
    std::size_t evaluations = 0;
    bool converged = false;
    std::vector<double> simplex_history; ///< best RMSE after each simplex iteration
};

/// Default search box: [x/3, 3x] around the initial value, transfer coefficient kept inside (0, 1).
ParameterBounds default_bounds(CircuitParameter param, double initial);

/// Terminal voltage predicted at every trace sample, driving the circuit with
/// the measured current (linear interpolation between samples, forward-difference
/// di/dt) from dc_steady_state(initial_current).
std::vector<double> predict_voltage(const MeasuredTrace& trace, const CellParams& p, double initial_current);

/// Identify the free parameters by minimising the voltage RMSE over log-scaled,
/// box-bounded parameters. Both searches are derivative-free: Levenberg-Marquardt
/// uses a forward-difference Jacobian of the simulated voltage. Budget
/// exhaustion returns the best point found with converged = false.
IdentResult fit_circuit_params(const MeasuredTrace& trace, const CellParams& initial,
                               const BoundsMap& bounds = {}, const IdentOptions& options = {});

} // namespace ripple
