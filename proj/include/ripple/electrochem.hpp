#pragma once

// Faradaic and non-faradaic interface kinetics.
//
// Over-potentials are measured from the intercalation equilibrium potential,
// so equilibrium offsets of the side reactions live inside their prefactors.
// All functions are pure.

namespace ripple {

inline constexpr double kFaraday = 96485.33;     // C/mol
inline constexpr double kGasConstant = 8.314462; // J/(mol K)

/// Largest |exponent| accepted before an exponential is considered overflowing.
inline constexpr double kMaxExponent = 700.0;

struct ElectrochemParams {
    double exchange_current = 0.44; ///< lumped A*j0 of the intercalation reaction [A]
    double transfer_coeff = 0.5;    ///< anodic charge-transfer coefficient alpha_int
    int electrons = 1;
    double temperature = 298.15;  ///< [K]
    double ageing_alpha = 0.5;    ///< common cathodic coefficient of the side reactions
    double ageing_prefactor = 3e-6; ///< lumped k_ag [A]; placeholder, cancels in ageing ratios

    void validate() const;

    /// R*T/F [V]
    double thermal_voltage() const { return kGasConstant * temperature / kFaraday; }
};

struct SideReaction {
    double rate_prefactor = 1e-6; ///< [A], non-physical placeholder
    double cathodic_alpha = 0.5;
};

/// Individual side reactions in lumped-prefactor form. Defaults are placeholders.
struct SideReactionParams {
    SideReaction ec;
    SideReaction dmc;
    SideReaction plating;

    void validate() const;
    double total_prefactor() const {
        return ec.rate_prefactor + dmc.rate_prefactor + plating.rate_prefactor;
    }
};

/// Cathodic side-reaction currents; every entry is <= 0.
struct SideReactionRates {
    double ec = 0.0;
    double dmc = 0.0;
    double plating = 0.0;
    double total = 0.0;
};

/// Full Butler-Volmer intercalation current at over-potential `eta` [V].
/// Throws DomainError for non-finite eta or |F*eta/(R*T)| > kMaxExponent.
double intercalation_current(double eta, const ElectrochemParams& p);

/// d(intercalation_current)/d(eta) [S].
double intercalation_slope(double eta, const ElectrochemParams& p);

/// Inverse of intercalation_current. Closed form for a symmetric reaction,
/// Newton iteration otherwise (|residual| <= 1e-12 A, at most 100 iterations).
double overpotential_for_current(double current, const ElectrochemParams& p);

/// Small over-potential linearisation i0*n*F*eta/(R*T).
double linearized_current(double eta, const ElectrochemParams& p);

/// R*T/(n*F*i0) [Ohm]
double charge_transfer_resistance(const ElectrochemParams& p);

/// Non-faradaic current of the double layer.
double double_layer_current(double deta_dt, double c_dl);

SideReactionRates side_reaction_rates(double eta, const SideReactionParams& s,
                                      const ElectrochemParams& p);

/// Magnitude of the lumped ageing current k_ag*exp(-alpha_ag*F*eta/(R*T)).
double lumped_ageing_rate(double eta, const ElectrochemParams& p);

/// lumped_ageing_rate(eta) / lumped_ageing_rate(eta_ref), evaluated without k_ag.
double relative_ageing_rate(double eta, double eta_ref, const ElectrochemParams& p);

/// Ageing rate with the small-signal substitution eta = R_ct * i_int.
double ageing_rate_from_current(double i_int, const ElectrochemParams& p);

} // namespace ripple
