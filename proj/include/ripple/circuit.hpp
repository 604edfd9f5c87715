#pragma once

#include "ripple/electrochem.hpp"

#include <complex>

namespace ripple {

/// Randles equivalent circuit of a cell module.
///
/// Topology, discharge current positive:
///
///   V_ocv -- R0 -- L0 -- (R_sei || C_sei) -- [ C_dl || ( BV -- (Rw1 || Cw1) -- (Rw2 || Cw2) ) ] --
///
/// Defaults are the identified parameters of a 6s 18650 NMC module at 80 % SoC and 25 degC.
struct CellParams {
    double v_ocv = 22.0;
    double r0 = 77.5e-3;
    double l0 = 533e-9;
    double r_sei = 67e-3;
    double c_sei = 23e-3;
    double c_dl = 2.6e-3;
    double rw1 = 0.6e-3;
    double cw1 = 3.5e-3;
    double rw2 = 30e-3;
    double cw2 = 258.0;
    ElectrochemParams electrochem;
    SideReactionParams side_reactions;

    void validate() const;

    /// Smallest time constant of the R-C pairs (a zero resistance shorts its pair).
    double min_time_constant() const;
};

/// Dynamic state: capacitor voltages.
struct CellState {
    double v_dl = 0.0;  ///< across C_dl, i.e. the whole faradaic branch
    double v_w1 = 0.0;
    double v_w2 = 0.0;
    double v_sei = 0.0;

    /// Butler-Volmer over-potential.
    double overpotential() const { return v_dl - v_w1 - v_w2; }

    CellState& operator+=(const CellState& o)
    {
        v_dl += o.v_dl;
        v_w1 += o.v_w1;
        v_w2 += o.v_w2;
        v_sei += o.v_sei;
        return *this;
    }
    friend CellState operator+(CellState a, const CellState& b) { return a += b; }
    friend CellState operator*(double s, const CellState& a)
    {
        return {s * a.v_dl, s * a.v_w1, s * a.v_w2, s * a.v_sei};
    }
    friend bool operator==(const CellState&, const CellState&) = default;
};

CellState state_derivative(const CellState& state, double i_load, const CellParams& p);

/// Same as state_derivative, with the intercalation current already known.
CellState state_derivative(const CellState& state, double i_load, double i_int, const CellParams& p);

double terminal_voltage(const CellState& state, double i_load, double di_load_dt, const CellParams& p);

/// Equilibrium state under a constant load current.
CellState dc_steady_state(double i_dc, const CellParams& p);

/// Small-signal impedance with Butler-Volmer linearised at `bias_eta`.
std::complex<double> impedance(double f, const CellParams& p, double bias_eta = 0.0);

/// Corner frequency of C_dl against the low-frequency faradaic branch resistance.
double cutoff_frequency(const CellParams& p);

/// fc / sqrt(fc^2 + f^2): fraction of AC load amplitude carried by the faradaic branch.
double intercalation_divider(double f, double fc);

} // namespace ripple
