#include "ripple/circuit.hpp"

#include "ripple/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ripple {

namespace {

// dv/dt of a parallel R-C pair fed by `current`; a zero resistance shorts the pair.
double rc_derivative(double v, double current, double r, double c)
{
    if (r == 0.0)
        return 0.0;
    return (current - v / r) / c;
}

std::complex<double> rc_impedance(double r, double c, double omega)
{
    return r / std::complex<double>(1.0, omega * r * c);
}

} // namespace

void CellParams::validate() const
{
    auto check = [](bool ok, const char* msg) {
        if (!ok)
            throw ConfigError(msg);
    };
    for (double r : {r0, r_sei, rw1, rw2})
        check(r >= 0.0 && std::isfinite(r), "resistances must be finite and non-negative");
    for (double c : {c_sei, c_dl, cw1, cw2})
        check(c > 0.0 && std::isfinite(c), "capacitances must be finite and positive");
    check(l0 >= 0.0 && std::isfinite(l0), "inductance must be finite and non-negative");
    check(v_ocv > 0.0 && std::isfinite(v_ocv), "open-circuit voltage must be positive");
    electrochem.validate();
    side_reactions.validate();
}

double CellParams::min_time_constant() const
{
    double tau = std::numeric_limits<double>::infinity();
    for (auto [r, c] : {std::pair{r_sei, c_sei}, std::pair{rw1, cw1}, std::pair{rw2, cw2}}) {
        if (r > 0.0)
            tau = std::min(tau, r * c);
    }
    return tau;
}

CellState state_derivative(const CellState& state, double i_load, double i_int, const CellParams& p)
{
    return {
        (i_load - i_int) / p.c_dl,
        rc_derivative(state.v_w1, i_int, p.rw1, p.cw1),
        rc_derivative(state.v_w2, i_int, p.rw2, p.cw2),
        rc_derivative(state.v_sei, i_load, p.r_sei, p.c_sei),
    };
}

CellState state_derivative(const CellState& state, double i_load, const CellParams& p)
{
    return state_derivative(state, i_load, intercalation_current(state.overpotential(), p.electrochem), p);
}

double terminal_voltage(const CellState& state, double i_load, double di_load_dt, const CellParams& p)
{
    return p.v_ocv - (p.r0 * i_load + p.l0 * di_load_dt + state.v_sei + state.v_dl);
}

CellState dc_steady_state(double i_dc, const CellParams& p)
{
    CellState s;
    s.v_w1 = i_dc * p.rw1;
    s.v_w2 = i_dc * p.rw2;
    s.v_sei = i_dc * p.r_sei;
    s.v_dl = overpotential_for_current(i_dc, p.electrochem) + s.v_w1 + s.v_w2;
    return s;
}

std::complex<double> impedance(double f, const CellParams& p, double bias_eta)
{
    const double omega = 2.0 * std::numbers::pi * f;
    const double r_ct = 1.0 / intercalation_slope(bias_eta, p.electrochem);
    const std::complex<double> faradaic = r_ct + rc_impedance(p.rw1, p.cw1, omega) + rc_impedance(p.rw2, p.cw2, omega);
    const std::complex<double> interface = 1.0 / (std::complex<double>(0.0, omega * p.c_dl) + 1.0 / faradaic);
    return std::complex<double>(p.r0, omega * p.l0) + rc_impedance(p.r_sei, p.c_sei, omega) + interface;
}

double cutoff_frequency(const CellParams& p)
{
    const double r_branch = charge_transfer_resistance(p.electrochem) + p.rw1 + p.rw2;
    return 1.0 / (2.0 * std::numbers::pi * r_branch * p.c_dl);
}

double intercalation_divider(double f, double fc)
{
    return fc / std::hypot(fc, f);
}

} // namespace ripple
