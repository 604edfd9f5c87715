#include "ripple/simulator.hpp"

#include "ripple/detail/rk4.hpp"
#include "ripple/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace ripple {

namespace {

// Fractional phase in [0, 1); values within 1e-9 of a corner snap onto it so
// samples taken exactly at a corner land on the segment that starts there.
double snapped_phase(double t, double frequency, std::initializer_list<double> corners)
{
    const double x = t * frequency;
    double u = x - std::floor(x);
    for (double c : corners) {
        if (std::abs(u - c) <= 1e-9) {
            u = c;
            break;
        }
    }
    return u >= 1.0 ? 0.0 : u;
}

void require(bool ok, const std::string& msg)
{
    if (!ok)
        throw ConfigError(msg);
}

} // namespace

std::string_view to_string(ProfileKind kind)
{
    switch (kind) {
    case ProfileKind::Dc:
        return "dc";
    case ProfileKind::Sine:
        return "sine";
    case ProfileKind::Rect:
        return "rect";
    }
    return "dc";
}

ProfileKind profile_kind_from_string(std::string_view name)
{
    if (name == "dc")
        return ProfileKind::Dc;
    if (name == "sine")
        return ProfileKind::Sine;
    if (name == "rect")
        return ProfileKind::Rect;
    throw ConfigError(fmt::format("unknown profile kind '{}' (expected dc, sine or rect)", name));
}

LoadProfile LoadProfile::dc(double i_dc)
{
    return {ProfileKind::Dc, i_dc, 0.0, 0.0, 0.5, 1e6};
}

LoadProfile LoadProfile::sine(double i_dc, double i_ac, double frequency)
{
    return {ProfileKind::Sine, i_dc, i_ac, frequency, 0.5, 1e6};
}

LoadProfile LoadProfile::rect(double i_dc, double i_ac, double frequency, double duty, double slew_rate)
{
    return {ProfileKind::Rect, i_dc, i_ac, frequency, duty, slew_rate};
}

double LoadProfile::high_level() const
{
    return i_dc + 2.0 * i_ac * (1.0 - duty);
}

double LoadProfile::low_level() const
{
    return i_dc - 2.0 * i_ac * duty;
}

void LoadProfile::validate() const
{
    require(std::isfinite(i_dc), "profile: i_dc must be finite");
    if (kind == ProfileKind::Dc)
        return;
    require(std::isfinite(i_ac) && i_ac >= 0.0, "profile: i_ac must be finite and non-negative");
    require(std::isfinite(frequency) && frequency > 0.0, "profile: frequency must be positive");
    if (kind == ProfileKind::Rect) {
        require(duty > 0.0 && duty < 1.0, "profile: duty must lie in (0, 1)");
        require(std::isfinite(slew_rate) && slew_rate > 0.0, "profile: slew rate must be positive");
        const double rise = (high_level() - low_level()) / slew_rate * frequency;
        require(rise <= std::min(duty, 1.0 - duty),
                fmt::format("profile: edges of {:.6g} s do not fit the pulse at {:.6g} Hz, duty {:.6g}",
                            rise / frequency, frequency, duty));
    }
}

ProfileSample sample_profile(const LoadProfile& profile, double t)
{
    switch (profile.kind) {
    case ProfileKind::Dc:
        return {profile.i_dc, 0.0};
    case ProfileKind::Sine: {
        const double x = t * profile.frequency;
        const double arg = 2.0 * std::numbers::pi * (x - std::floor(x));
        const double omega = 2.0 * std::numbers::pi * profile.frequency;
        return {profile.i_dc + profile.i_ac * std::sin(arg), profile.i_ac * omega * std::cos(arg)};
    }
    case ProfileKind::Rect: {
        const double high = profile.high_level();
        const double low = profile.low_level();
        const double rise = (high - low) / profile.slew_rate * profile.frequency;
        const double d = profile.duty;
        const double u = snapped_phase(t, profile.frequency, {rise, d, d + rise, 1.0});
        if (u < rise)
            return {low + (high - low) * (u / rise), profile.slew_rate};
        if (u < d)
            return {high, 0.0};
        if (u < d + rise)
            return {high - (high - low) * ((u - d) / rise), -profile.slew_rate};
        return {low, 0.0};
    }
    }
    return {profile.i_dc, 0.0};
}

void SimulationTrace::reserve(std::size_t n)
{
    for (auto* column : {&time, &i_load, &v_terminal, &eta_ct, &i_int, &i_dl, &ageing_rate})
        column->reserve(n);
}

double default_time_step(const LoadProfile& profile)
{
    constexpr double kFinest = 0.2e-6;
    if (!profile.periodic())
        return kFinest;
    return std::min(profile.period() / 500.0, kFinest);
}

double max_time_step(const LoadProfile& profile, const CellParams& p)
{
    double limit = p.min_time_constant() / 10.0;
    if (profile.periodic())
        limit = std::min(limit, profile.period() / 200.0);
    return limit;
}

namespace {

void check_step(double dt, const LoadProfile& profile, const CellParams& p)
{
    require(std::isfinite(dt) && dt > 0.0, "dt must be positive");
    const double limit = max_time_step(profile, p);
    require(dt <= limit * (1.0 + 1e-12),
            fmt::format("dt = {:.6g} s exceeds the stable limit {:.6g} s "
                        "(min of period/200 and smallest R-C time constant/10)",
                        dt, limit));
}

void record(SimulationTrace& trace, const detail::StepPoint& pt, double time, const CellParams& p)
{
    trace.time.push_back(time);
    trace.i_load.push_back(pt.load.current);
    trace.v_terminal.push_back(terminal_voltage(pt.state, pt.load.current, pt.load.slope, p));
    trace.eta_ct.push_back(pt.eta);
    trace.i_int.push_back(pt.i_int);
    trace.i_dl.push_back(double_layer_current((pt.load.current - pt.i_int) / p.c_dl, p.c_dl));
    trace.ageing_rate.push_back(lumped_ageing_rate(pt.eta, p.electrochem));
}

} // namespace

SimulationResult simulate(const LoadProfile& profile, const CellParams& p,
                          const SimulationSettings& settings, const CellState& initial)
{
    profile.validate();
    p.validate();
    check_step(settings.dt, profile, p);
    require(std::isfinite(settings.duration) && settings.duration >= settings.dt,
            "duration must be at least one time step");
    require(settings.stride >= 1, "stride must be at least 1");

    const auto steps = static_cast<std::size_t>(std::llround(settings.duration / settings.dt));
    const auto source = [&profile](double t) { return sample_profile(profile, t); };

    SimulationResult out;
    out.trace.reserve(steps / settings.stride + 1);
    out.final_state = detail::integrate_rk4(
        p, source, initial, settings.start_time, settings.dt, steps,
        [&](const detail::StepPoint& pt) {
            if (pt.index % settings.stride == 0)
                record(out.trace, pt, pt.time, p);
        });
    out.end_time = settings.start_time + static_cast<double>(steps) * settings.dt;
    return out;
}

PeriodicResult run_to_periodic_steady_state(const LoadProfile& profile, const CellParams& p,
                                            const PeriodicOptions& options)
{
    profile.validate();
    p.validate();
    require(options.tolerance > 0.0, "steady-state tolerance must be positive");
    require(options.max_cycles >= 1, "max_cycles must be at least 1");

    PeriodicResult out;
    const CellState start = dc_steady_state(profile.i_dc, p);
    out.reference_eta = start.overpotential();
    out.final_state = start;
    const double ref_rate = lumped_ageing_rate(out.reference_eta, p.electrochem);

    if (!profile.periodic()) {
        out.dt = options.max_dt > 0.0 ? options.max_dt : default_time_step(profile);
        out.cycles = 1;
        out.converged = true;
        out.mean_relative_ageing = relative_ageing_rate(out.reference_eta, out.reference_eta, p.electrochem);
        out.mean_ageing_rate = ref_rate * out.mean_relative_ageing;
        out.mean_i_load = profile.i_dc;
        out.mean_i_int = intercalation_current(out.reference_eta, p.electrochem);
        out.mean_eta = out.reference_eta;
        out.max_split_residual = std::abs(out.mean_i_load - out.mean_i_int -
                                          double_layer_current((out.mean_i_load - out.mean_i_int) / p.c_dl, p.c_dl));
        if (options.trace_stride > 0) {
            const detail::StepPoint pt{0, 0.0, start, {profile.i_dc, 0.0}, out.reference_eta, out.mean_i_int};
            record(out.last_cycle, pt, 0.0, p);
        }
        return out;
    }

    const double period = profile.period();
    const double max_dt = options.max_dt > 0.0 ? options.max_dt : default_time_step(profile);
    const auto steps = static_cast<std::size_t>(std::ceil(period / max_dt - 1e-9));
    out.dt = period / static_cast<double>(steps);
    check_step(out.dt, profile, p);

    const auto source = [&profile](double t) { return sample_profile(profile, t); };
    const double inv_n = 1.0 / static_cast<double>(steps);
    double previous = 0.0;
    CellState state = start;

    for (std::size_t cycle = 1; cycle <= options.max_cycles; ++cycle) {
        double sum_rel = 0.0;
        double sum_i_load = 0.0;
        double sum_i_int = 0.0;
        double sum_eta = 0.0;
        const double offset = static_cast<double>(cycle - 1) * period;
        if (options.trace_stride > 0) {
            out.last_cycle = SimulationTrace{};
            out.last_cycle.reserve(steps / options.trace_stride + 1);
        }
        state = detail::integrate_rk4(p, source, state, 0.0, out.dt, steps, [&](const detail::StepPoint& pt) {
            if (options.trace_stride > 0 && (pt.index % options.trace_stride == 0 || pt.index == steps))
                record(out.last_cycle, pt, offset + pt.time, p);
            if (pt.index == steps)
                return;
            const double i_dl = double_layer_current((pt.load.current - pt.i_int) / p.c_dl, p.c_dl);
            out.max_split_residual = std::max(out.max_split_residual,
                                              std::abs(pt.load.current - pt.i_int - i_dl));
            sum_rel += relative_ageing_rate(pt.eta, out.reference_eta, p.electrochem);
            sum_i_load += pt.load.current;
            sum_i_int += pt.i_int;
            sum_eta += pt.eta;
        });

        out.cycles = cycle;
        out.mean_relative_ageing = sum_rel * inv_n;
        out.mean_i_load = sum_i_load * inv_n;
        out.mean_i_int = sum_i_int * inv_n;
        out.mean_eta = sum_eta * inv_n;
        if (cycle >= 2) {
            out.residual = std::abs(out.mean_relative_ageing - previous) / std::abs(previous);
            if (out.residual < options.tolerance) {
                out.converged = true;
                break;
            }
        }
        previous = out.mean_relative_ageing;
    }
    out.final_state = state;
    out.mean_ageing_rate = ref_rate * out.mean_relative_ageing;
    return out;
}

} // namespace ripple
