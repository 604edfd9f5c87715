#include "ripple/electrochem.hpp"

#include "ripple/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace ripple {

namespace {

void require_finite(double value, const char* what)
{
    if (!std::isfinite(value))
        throw DomainError(fmt::format("{}: non-finite argument", what));
}

void guard_exponent(double exponent, const char* what)
{
    if (!(std::abs(exponent) <= kMaxExponent))
        throw DomainError(fmt::format("{}: exponent {:.6g} exceeds overflow guard", what, exponent));
}

} // namespace

void ElectrochemParams::validate() const
{
    if (!(exchange_current > 0.0) || !std::isfinite(exchange_current))
        throw ConfigError("exchange current must be positive");
    if (!(transfer_coeff > 0.0 && transfer_coeff < 1.0))
        throw ConfigError("charge-transfer coefficient must lie in (0, 1)");
    if (electrons < 1)
        throw ConfigError("electron count must be a positive integer");
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw ConfigError("temperature must be positive");
    if (!(ageing_alpha > 0.0 && ageing_alpha < 1.0))
        throw ConfigError("ageing charge coefficient must lie in (0, 1)");
    if (!(ageing_prefactor >= 0.0) || !std::isfinite(ageing_prefactor))
        throw ConfigError("ageing prefactor must be non-negative");
}

void SideReactionParams::validate() const
{
    for (const SideReaction* r : {&ec, &dmc, &plating}) {
        if (!(r->rate_prefactor >= 0.0) || !std::isfinite(r->rate_prefactor))
            throw ConfigError("side-reaction prefactors must be non-negative");
        if (!(r->cathodic_alpha > 0.0 && r->cathodic_alpha < 1.0))
            throw ConfigError("side-reaction charge coefficients must lie in (0, 1)");
    }
}

double intercalation_current(double eta, const ElectrochemParams& p)
{
    require_finite(eta, "intercalation_current");
    const double x = eta / p.thermal_voltage();
    guard_exponent(x, "intercalation_current");
    const double a = p.transfer_coeff;
    return p.exchange_current * (std::exp(a * x) - std::exp(-(1.0 - a) * x));
}

double intercalation_slope(double eta, const ElectrochemParams& p)
{
    require_finite(eta, "intercalation_slope");
    const double vt = p.thermal_voltage();
    const double x = eta / vt;
    guard_exponent(x, "intercalation_slope");
    const double a = p.transfer_coeff;
    return p.exchange_current / vt * (a * std::exp(a * x) + (1.0 - a) * std::exp(-(1.0 - a) * x));
}

double overpotential_for_current(double current, const ElectrochemParams& p)
{
    require_finite(current, "overpotential_for_current");
    const double vt = p.thermal_voltage();
    const double symmetric = 2.0 * vt * std::asinh(current / (2.0 * p.exchange_current));
    if (p.transfer_coeff == 0.5)
        return symmetric;

    // BV is strictly increasing, so Newton from the symmetric guess with a
    // shrinking bracket cannot wander off.
    const double tol = std::max(1e-12, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(current));
    double eta = symmetric;
    double lo = -kMaxExponent * vt;
    double hi = kMaxExponent * vt;
    for (int iter = 0; iter < 100; ++iter) {
        const double residual = intercalation_current(eta, p) - current;
        if (std::abs(residual) <= tol)
            return eta;
        if (residual > 0.0)
            hi = eta;
        else
            lo = eta;
        double next = eta - residual / intercalation_slope(eta, p);
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        eta = next;
    }
    throw NumericError(fmt::format("overpotential_for_current: Newton did not converge for {:.17g} A", current));
}

double linearized_current(double eta, const ElectrochemParams& p)
{
    require_finite(eta, "linearized_current");
    return p.exchange_current * p.electrons * eta / p.thermal_voltage();
}

double charge_transfer_resistance(const ElectrochemParams& p)
{
    return p.thermal_voltage() / (p.electrons * p.exchange_current);
}

double double_layer_current(double deta_dt, double c_dl)
{
    return c_dl * deta_dt;
}

SideReactionRates side_reaction_rates(double eta, const SideReactionParams& s,
                                      const ElectrochemParams& p)
{
    require_finite(eta, "side_reaction_rates");
    const double x = eta / p.thermal_voltage();
    auto rate = [x](const SideReaction& r) {
        const double exponent = -r.cathodic_alpha * x;
        guard_exponent(exponent, "side_reaction_rates");
        return -r.rate_prefactor * std::exp(exponent);
    };
    SideReactionRates out;
    out.ec = rate(s.ec);
    out.dmc = rate(s.dmc);
    out.plating = rate(s.plating);
    out.total = out.ec + out.dmc + out.plating;
    return out;
}

double lumped_ageing_rate(double eta, const ElectrochemParams& p)
{
    require_finite(eta, "lumped_ageing_rate");
    const double exponent = -p.ageing_alpha * eta / p.thermal_voltage();
    guard_exponent(exponent, "lumped_ageing_rate");
    return p.ageing_prefactor * std::exp(exponent);
}

double relative_ageing_rate(double eta, double eta_ref, const ElectrochemParams& p)
{
    require_finite(eta, "relative_ageing_rate");
    require_finite(eta_ref, "relative_ageing_rate");
    const double exponent = -p.ageing_alpha * (eta - eta_ref) / p.thermal_voltage();
    guard_exponent(exponent, "relative_ageing_rate");
    return std::exp(exponent);
}

double ageing_rate_from_current(double i_int, const ElectrochemParams& p)
{
    return lumped_ageing_rate(charge_transfer_resistance(p) * i_int, p);
}

} // namespace ripple
