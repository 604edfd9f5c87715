// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "oracles.hpp"

#include "ripple/ageing.hpp"
#include "ripple/circuit.hpp"
#include "ripple/regression.hpp"
#include "ripple/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

using namespace ripple;

namespace {

// Frozen oracle values.
constexpr double kSeriesSum = 0.23349222221893498; // r0 + r_sei + R_ct + rw1 + rw2 [Ohm]
constexpr double kEtaStar = 0.12528081314845652;   // (2RT/F) asinh(5/0.88) [V]

struct Verdict {
    bool pass = false;
    std::string detail;
};

// Largest |i_load - i_int - i_dl| seen by any simulation below (criterion 5).
double g_split = 0.0;

void track_split(const SimulationTrace& tr)
{
    for (std::size_t k = 0; k < tr.size(); ++k)
        g_split = std::max(g_split, std::abs(tr.i_load[k] - tr.i_int[k] - tr.i_dl[k]));
}

ApCurve g_sweep;

Verdict sweep_fit()
{
    const CellParams p;
    const auto freqs = log_frequency_grid(1.0, 1e5, 40);
    g_sweep = ageing_sweep(freqs, 5.0, 5.0, p);
    const ApFit fit = fit_ap_model(g_sweep);
    return {fit.r_squared >= 0.99,
            fmt::format("{} points, R^2 = {:.6f} (a = {:.6g}, b = {:.6g} Hz, c = {:.6g} Hz^2)", freqs.size(),
                        fit.r_squared, fit.model.a, fit.model.b, fit.model.c)};
}

Verdict sweep_shape()
{
    const auto& pts = g_sweep.points;
    if (pts.empty())
        return {false, "no sweep"};
    const double fc = cutoff_frequency(CellParams{});
    const double ap_lo = pts.front().ap;
    const double ap_hi = pts.back().ap;
    std::size_t violations = 0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        if (pts[k - 1].frequency > 2.0 * fc && pts[k].ap > pts[k - 1].ap * (1.0 + 1e-3))
            ++violations;
    }
    const double ratio = (ap_hi - 1.0) / (ap_lo - 1.0);
    return {ap_lo > 1.0 && violations == 0 && ratio <= 0.05,
            fmt::format("AP(1 Hz) = {:.6f}, AP(100 kHz) = {:.6f}, excess ratio {:.4f}, {} rises above {:.1f} Hz",
                        ap_lo, ap_hi, ratio, violations, 2.0 * fc)};
}

Verdict impedance_check()
{
    const CellParams p;
    double worst_mag = 0.0;
    double worst_phase = 0.0;
    for (double f : {10.0, 100.0, 1e3, 1e4}) {
        const auto prof = LoadProfile::sine(0.0, 1e-3, f);
        const double period = prof.period();
        const auto steps = static_cast<long>(std::ceil(period / max_time_step(prof, p) - 1e-9));
        const double dt = period / static_cast<double>(steps);
        const double warm = std::ceil(std::max(3.0, 0.02 / period)) * period;
        const auto settle = simulate(prof, p, {.dt = dt, .duration = warm, .stride = 1000}, CellState{});
        const auto window =
            simulate(prof, p, {.dt = dt, .duration = 2.0 * period, .start_time = settle.end_time}, settle.final_state);
        track_split(settle.trace);
        track_split(window.trace);

        const std::size_t n = window.trace.size() - 1;
        const std::span<const double> v(window.trace.v_terminal.data(), n);
        const std::span<const double> i(window.trace.i_load.data(), n);
        const std::complex<double> z = -oracle::phasor(v, dt, f) / oracle::phasor(i, dt, f);
        const std::complex<double> want = impedance(f, p);
        worst_mag = std::max(worst_mag, std::abs(std::abs(z) / std::abs(want) - 1.0));
        worst_phase = std::max(worst_phase, std::abs(std::arg(z / want)) * 180.0 / std::numbers::pi);
    }

    const double z0 = std::abs(impedance(0.0, p));
    const double lo = std::abs(impedance(10.0, p));
    const double hi = std::abs(impedance(5e4, p));
    double dip = lo;
    double dip_f = 10.0;
    for (int k = 1; k < 1000; ++k) {
        const double f = 10.0 * std::pow(5e3, k / 1000.0);
        if (const double m = std::abs(impedance(f, p)); m < dip) {
            dip = m;
            dip_f = f;
        }
    }
    const bool pass =
        worst_mag <= 0.01 && worst_phase <= 1.0 && std::abs(z0 - kSeriesSum) <= 1e-6 && dip < lo && dip < hi;
    return {pass, fmt::format("phasor error {:.2e} rel / {:.2e} deg, |Z(0)| = {:.4f} mOhm, |Z| min {:.2f} mOhm "
                              "at {:.0f} Hz",
                              worst_mag, worst_phase, z0 * 1e3, dip * 1e3, dip_f)};
}

Verdict steady_state()
{
    const CellParams p;
    const CellState s = dc_steady_state(5.0, p);
    const CellState d = state_derivative(s, 5.0, p);
    const double deriv = std::max({std::abs(d.v_dl), std::abs(d.v_w1), std::abs(d.v_w2), std::abs(d.v_sei)});
    const double err = std::abs(s.overpotential() - kEtaStar);
    return {err <= 1e-6 && deriv <= 1e-9,
            fmt::format("eta = {:.7f} mV (closed form error {:.1e} V), max derivative {:.1e}", s.overpotential() * 1e3,
                        err, deriv)};
}

Verdict conservation()
{
    const CellParams p;
    double worst_mean = 0.0;
    for (double f : {1.0, 10.0, 100.0, 1e3, 1e4, 1e5}) {
        const auto r = run_to_periodic_steady_state(LoadProfile::sine(5.0, 5.0, f), p);
        if (!r.converged)
            return {false, fmt::format("no periodic steady state at {} Hz", f)};
        g_split = std::max(g_split, r.max_split_residual);
        track_split(r.last_cycle);
        worst_mean = std::max(worst_mean, oracle::rel(r.mean_i_int, 5.0));
    }
    return {g_split <= 1e-9 && worst_mean <= 1e-4,
            fmt::format("max split residual {:.2e} A, worst cycle-mean i_int error {:.2e} rel", g_split, worst_mean)};
}

Verdict ap_regression()
{
    const ApModel truth{2.0, 1000.0, 1e4};
    ApCurve clean;
    ApCurve noisy;
    std::mt19937_64 rng(20240601);
    std::normal_distribution<double> gauss(0.0, 0.01);
    for (int k = 0; k < 30; ++k) {
        const double f = std::pow(10.0, 5.0 * k / 29.0);
        const double ap = ap_model_eval(f, truth);
        clean.points.push_back({f, ap});
        noisy.points.push_back({f, ap * (1.0 + gauss(rng))});
    }
    const auto worst = [&](const ApModel& m) {
        return std::max({oracle::rel(m.a, truth.a), oracle::rel(m.b, truth.b), oracle::rel(m.c, truth.c)});
    };
    const ApFit a = fit_ap_model(clean);
    const ApFit b = fit_ap_model(noisy);
    return {worst(a.model) <= 1e-4 && worst(b.model) <= 0.05 && b.r_squared >= 0.995,
            fmt::format("noiseless error {:.1e}, 1% noise error {:.2e} with R^2 = {:.5f}", worst(a.model),
                        worst(b.model), b.r_squared)};
}

Verdict identification()
{
    const CellParams truth;
    const auto prof = LoadProfile::rect(5.0, 5.0, 500.0);
    const auto sim = simulate(prof, truth, {.dt = 1e-7, .duration = 4.5e-3}, dc_steady_state(5.0, truth));
    track_split(sim.trace);
    const MeasuredTrace trace{sim.trace.time, sim.trace.i_load, sim.trace.v_terminal};

    CellParams start = truth;
    double sign = 1.0;
    for (auto param : kIdentifiableParameters) {
        set_parameter(start, param, get_parameter(truth, param) * (1.0 + 0.2 * sign));
        sign = -sign;
    }
    IdentOptions opts;
    opts.initial_current = 5.0;
    const IdentResult r = fit_circuit_params(trace, start, {}, opts);
    double worst = 0.0;
    std::string worst_name;
    for (auto param : kIdentifiableParameters) {
        const double e = oracle::rel(get_parameter(r.params, param), get_parameter(truth, param));
        if (e >= worst) {
            worst = e;
            worst_name = parameter_name(param);
        }
    }
    return {worst <= 0.02 && r.rmse_voltage < 10e-6,
            fmt::format("{} parameters, worst {} off by {:.1e}, RMSE {:.2e} V after {} simulations",
                        kIdentifiableParameters.size(), worst_name, worst, r.rmse_voltage, r.evaluations)};
}

Verdict prefactor_cancellation()
{
    bool same = true;
    std::string values;
    for (double f : {3.0, 300.0, 3e4}) {
        CellParams p;
        std::vector<double> ap;
        for (double k : {1e-9, 1.0, 1e3}) {
            p.electrochem.ageing_prefactor = k;
            ap.push_back(ageing_potential_at(f, 5.0, 5.0, p));
        }
        same = same && ap[0] == ap[1] && ap[1] == ap[2];
        values += fmt::format("{}AP({} Hz) = {:.17g}", values.empty() ? "" : ", ", f, ap[0]);
    }
    return {same, values};
}

Verdict integrator_order()
{
    const CellParams p;
    const auto prof = LoadProfile::sine(5.0, 5.0, 1000.0);
    const auto run = [&](double dt) {
        const auto r = simulate(prof, p, {.dt = dt, .duration = 1e-3, .stride = 1000}, dc_steady_state(5.0, p));
        track_split(r.trace);
        return r.final_state.overpotential();
    };
    const double x1 = run(2e-7);
    const double x2 = run(1e-7);
    const double x4 = run(5e-8);
    const double ratio = std::abs(x1 - x2) / std::abs(x2 - x4);
    const double order = std::log2(ratio);
    return {order >= 3.8 && order <= 4.2,
            fmt::format("error ratio per halving {:.2f} (order {:.2f})", ratio, order)};
}

} // namespace

int main()
{
    struct Criterion {
        int id;
        const char* name;
        std::function<Verdict()> check;
    };
    const std::vector<Criterion> criteria{
        {1, "sweep fit quality", sweep_fit},
        {2, "high-frequency decay", sweep_shape},
        {3, "impedance cross-check", impedance_check},
        {4, "DC steady state", steady_state},
        {6, "AP model recovery", ap_regression},
        {7, "parameter identification", identification},
        {8, "k_ag cancellation", prefactor_cancellation},
        {9, "RK4 order", integrator_order},
        {5, "current conservation", conservation},
    };

    std::vector<std::string> lines(criteria.size() + 1);
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.check();
        } catch (const std::exception& e) {
            v = {false, fmt::format("error: {}", e.what())};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!v.pass)
            ++failed;
        lines[static_cast<std::size_t>(c.id)] =
            fmt::format("[{}] {}. {}: {} ({:.1f} s)", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail, secs);
        std::fprintf(stderr, "%s\n", lines[static_cast<std::size_t>(c.id)].c_str());
    }
    for (std::size_t k = 1; k < lines.size(); ++k)
        std::printf("%s\n", lines[k].c_str());
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
