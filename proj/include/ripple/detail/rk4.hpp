#pragma once

#include "ripple/circuit.hpp"
#include "ripple/errors.hpp"
#include "ripple/simulator.hpp"

#include <cstddef>

#include <fmt/format.h>

namespace ripple::detail {

/// Quantities at a step boundary, before the step is taken.
struct StepPoint {
    std::size_t index;
    double time;
    const CellState& state;
    ProfileSample load;
    double eta;
    double i_int;
};

/// Fixed-step RK4 over `steps` steps of `dt` starting at `t0`. `source(t)`
/// returns the ProfileSample at t; `observe(const StepPoint&)` is called for
/// every step boundary including the final one. Returns the final state.
template <class Source, class Observer>
CellState integrate_rk4(const CellParams& p, const Source& source, CellState y, double t0,
                        double dt, std::size_t steps, Observer&& observe)
{
    const ElectrochemParams& ec = p.electrochem;
    double t = t0;
    try {
        for (std::size_t k = 0;; ++k) {
            t = t0 + static_cast<double>(k) * dt;
            const ProfileSample load = source(t);
            const double eta = y.overpotential();
            const double i_int = intercalation_current(eta, ec);
            observe(StepPoint{k, t, y, load, eta, i_int});
            if (k == steps)
                break;

            const double i_mid = source(t + 0.5 * dt).current;
            const double i_end = source(t + dt).current;
            const CellState k1 = state_derivative(y, load.current, i_int, p);
            const CellState y2 = y + (0.5 * dt) * k1;
            const CellState k2 = state_derivative(y2, i_mid, p);
            const CellState y3 = y + (0.5 * dt) * k2;
            const CellState k3 = state_derivative(y3, i_mid, p);
            const CellState y4 = y + dt * k3;
            const CellState k4 = state_derivative(y4, i_end, p);
            y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    } catch (const DomainError& e) {
        throw NumericError(fmt::format("integration failed at t = {:.9g} s: {}", t, e.what()), t);
    }
    return y;
}

} // namespace ripple::detail
