#include "doctest.h"
#include "oracles.hpp"

#include "ripple/errors.hpp"
#include "ripple/regression.hpp"
#include "ripple/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace ripple;

namespace {

ApCurve synthetic_curve(const ApModel& m, std::size_t n, double noise = 0.0, unsigned seed = 7)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise);
    ApCurve c;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = std::pow(10.0, 5.0 * static_cast<double>(k) / static_cast<double>(n - 1));
        const double ap = ap_model_eval(f, m) * (noise > 0.0 ? 1.0 + gauss(rng) : 1.0);
        c.points.push_back({f, ap});
    }
    return c;
}

// Rect-loaded trace of the default cell; 4.5 ms keeps the last sample off a corner.
MeasuredTrace reference_trace(double dt, double duration)
{
    const CellParams truth;
    const auto prof = LoadProfile::rect(5.0, 5.0, 500.0);
    const auto sim = simulate(prof, truth, {.dt = dt, .duration = duration}, dc_steady_state(5.0, truth));
    return {sim.trace.time, sim.trace.i_load, sim.trace.v_terminal};
}

CellParams perturbed(const CellParams& truth, std::span<const CircuitParameter> params)
{
    CellParams init = truth;
    double sign = 1.0;
    for (auto param : params) {
        set_parameter(init, param, get_parameter(truth, param) * (1.0 + 0.2 * sign));
        sign = -sign;
    }
    return init;
}

} // namespace

TEST_SUITE("regression") {

TEST_CASE("r squared")
{
    const std::vector<double> obs{1.0, 2.0, 3.0};
    CHECK(r_squared(obs, obs) == 1.0);
    const std::vector<double> mean{2.0, 2.0, 2.0};
    CHECK(r_squared(obs, mean) == 0.0);
    const std::vector<double> off{1.0, 2.0, 4.0};
    CHECK(r_squared(obs, off) == doctest::Approx(0.5).epsilon(1e-15));
    const std::vector<double> flat{4.0, 4.0};
    CHECK(r_squared(flat, flat) == 1.0);
    const std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(r_squared(obs, two), ConfigError);
    CHECK_THROWS_AS(r_squared({}, {}), ConfigError);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(8), b(8);
        for (int k = 0; k < 8; ++k) {
            a[k] = u(rng);
            b[k] = u(rng);
        }
        CHECK(r_squared(a, b) <= 1.0);
    }
}

TEST_CASE("noiseless model is recovered")
{
    const ApModel truth{2.0, 1000.0, 1e4};
    const auto fit = fit_ap_model(synthetic_curve(truth, 30));
    CHECK(fit.converged);
    CHECK_FALSE(fit.degenerate);
    CHECK(oracle::rel(fit.model.a, 2.0) <= 1e-4);
    CHECK(oracle::rel(fit.model.b, 1000.0) <= 1e-4);
    CHECK(oracle::rel(fit.model.c, 1e4) <= 1e-4);
    CHECK(fit.r_squared > 1.0 - 1e-10);
    CHECK(fit.gradient_norm <= 1e-6);
}

TEST_CASE("noisy model is recovered")
{
    const ApModel truth{2.0, 1000.0, 1e4};
    const auto fit = fit_ap_model(synthetic_curve(truth, 30, 0.01));
    CHECK(fit.converged);
    CHECK(oracle::rel(fit.model.a, 2.0) <= 0.05);
    CHECK(oracle::rel(fit.model.b, 1000.0) <= 0.05);
    CHECK(oracle::rel(fit.model.c, 1e4) <= 0.05);
    CHECK(fit.r_squared >= 0.995);
}

TEST_CASE("constant curve")
{
    ApCurve c;
    for (double f : {1.0, 10.0, 100.0, 1000.0, 1e4})
        c.points.push_back({f, 3.0});
    const auto fit = fit_ap_model(c);
    CHECK(fit.degenerate);
    CHECK(fit.model.a == 3.0);
    CHECK(fit.model.b == 0.0);
    CHECK(fit.r_squared == 1.0);
}

TEST_CASE("fit is scale and order invariant")
{
    const auto curve = synthetic_curve({1.5, 800.0, 4e5}, 25, 0.005, 11);
    const auto base = fit_ap_model(curve);

    auto scaled = curve;
    for (auto& pt : scaled.points)
        pt.ap *= 3.7;
    const auto s = fit_ap_model(scaled);
    CHECK(oracle::rel(s.model.a, 3.7 * base.model.a) <= 1e-9);
    CHECK(oracle::rel(s.model.b, base.model.b) <= 1e-9);
    CHECK(oracle::rel(s.model.c, base.model.c) <= 1e-9);

    auto shuffled = curve;
    std::mt19937 rng(5);
    std::shuffle(shuffled.points.begin(), shuffled.points.end(), rng);
    const auto r = fit_ap_model(shuffled);
    CHECK(r.model.a == base.model.a);
    CHECK(r.model.b == base.model.b);
    CHECK(r.model.c == base.model.c);
    CHECK(r.r_squared == base.r_squared);

    // at least as good as the constant model
    CHECK(base.r_squared >= 0.0);
    CHECK(base.r_squared <= 1.0);
}

TEST_CASE("fit input checks")
{
    ApCurve few;
    few.points = {{1.0, 2.0}, {10.0, 1.5}, {100.0, 1.2}};
    CHECK_THROWS_AS(fit_ap_model(few), ConfigError);
    auto bad = synthetic_curve({2.0, 1000.0, 1e4}, 6);
    bad.points[2].ap = -1.0;
    CHECK_THROWS_AS(fit_ap_model(bad), ConfigError);
}

TEST_CASE("parameter registry")
{
    CellParams p;
    for (auto param : kIdentifiableParameters) {
        const auto name = parameter_name(param);
        REQUIRE(parameter_from_name(name).has_value());
        CHECK(*parameter_from_name(name) == param);
        const double v = get_parameter(p, param);
        set_parameter(p, param, v * 0.5);
        CHECK(get_parameter(p, param) == v * 0.5);
    }
    CHECK_FALSE(parameter_from_name("v_ocv").has_value());
    CHECK(get_parameter(CellParams{}, CircuitParameter::CW2) == 258.0);
    CHECK(get_parameter(CellParams{}, CircuitParameter::ExchangeCurrent) == 0.44);

    const auto b = default_bounds(CircuitParameter::R0, 0.09);
    CHECK(b.lower == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(b.upper == doctest::Approx(0.27).epsilon(1e-15));
    const auto a = default_bounds(CircuitParameter::TransferCoeff, 0.5);
    CHECK(a.lower > 0.0);
    CHECK(a.upper < 1.0);
}

TEST_CASE("measured trace checks")
{
    MeasuredTrace t{{0.0, 1.0, 2.0}, {1.0, 1.0, 1.0}, {21.0, 21.0, 21.0}};
    CHECK_NOTHROW(t.validate());
    CHECK(t.dt() == 1.0);
    t.time[2] = 2.5;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    MeasuredTrace ragged{{0.0, 1.0}, {1.0}, {21.0, 21.0}};
    CHECK_THROWS_AS(ragged.validate(), ConfigError);
    MeasuredTrace single{{0.0}, {1.0}, {21.0}};
    CHECK_THROWS_AS(single.validate(), ConfigError);
}

TEST_CASE("predicted voltage reproduces the simulator")
{
    const auto trace = reference_trace(2e-7, 4.5e-3);
    const auto v = predict_voltage(trace, CellParams{}, 5.0);
    REQUIRE(v.size() == trace.voltage.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k)
        worst = std::max(worst, std::abs(v[k] - trace.voltage[k]));
    CHECK(worst <= 1e-9);
}

TEST_CASE("identification from the true parameters stops at once")
{
    const auto trace = reference_trace(2e-7, 4.5e-3);
    const auto r = fit_circuit_params(trace, CellParams{}, {}, {.initial_current = 5.0});
    CHECK(r.converged);
    CHECK(r.rmse_voltage < 1e-6);
    CHECK(r.evaluations <= 2 * (kIdentifiableParameters.size() + 1));
}

TEST_CASE("identification recovers a perturbed start")
{
    const auto trace = reference_trace(2e-7, 4.5e-3);
    const CellParams truth;
    const auto r = fit_circuit_params(trace, perturbed(truth, kIdentifiableParameters), {}, {.initial_current = 5.0});
    CHECK(r.converged);
    CHECK(r.rmse_voltage < 10e-6);
    for (auto param : kIdentifiableParameters) {
        CAPTURE(parameter_name(param));
        CHECK(oracle::rel(get_parameter(r.params, param), get_parameter(truth, param)) <= 0.02);
        CHECK_FALSE(r.bounds_hit.at(param));
    }
}

TEST_CASE("identification reaches the noise floor")
{
    auto trace = reference_trace(2e-7, 4.5e-3);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss(0.0, 1e-3);
    double floor = 0.0;
    for (double& v : trace.voltage) {
        const double n = gauss(rng);
        v += n;
        floor += n * n;
    }
    floor = std::sqrt(floor / static_cast<double>(trace.voltage.size()));
    const CellParams truth;
    const auto r = fit_circuit_params(trace, perturbed(truth, kIdentifiableParameters), {}, {.initial_current = 5.0});
    CHECK(r.rmse_voltage <= 1.2 * floor);
    CHECK(r.rmse_voltage >= 0.8 * floor);
}

TEST_CASE("identification respects bounds and subsets")
{
    const auto trace = reference_trace(2e-7, 4.5e-3);
    const CellParams truth;
    IdentOptions opts;
    opts.free_parameters = {CircuitParameter::R0, CircuitParameter::RSei};
    opts.initial_current = 5.0;
    auto init = truth;
    init.r0 = 0.09;
    init.r_sei = 0.06;
    BoundsMap bounds{{CircuitParameter::R0, {0.08, 0.1}}};
    const auto r = fit_circuit_params(trace, init, bounds, opts);
    CHECK(r.params.r0 == doctest::Approx(0.08).epsilon(1e-12));
    CHECK(r.bounds_hit.at(CircuitParameter::R0));
    CHECK(r.params.r0 >= 0.08);
    CHECK(r.params.r0 <= 0.1);
    CHECK(r.params.c_dl == truth.c_dl);
    CHECK(r.params.electrochem.exchange_current == truth.electrochem.exchange_current);

    opts.free_parameters.clear();
    CHECK_THROWS_AS(fit_circuit_params(trace, init, {}, opts), ConfigError);
}

TEST_CASE("identification budget exhaustion")
{
    const auto trace = reference_trace(2e-7, 2.5e-3);
    const CellParams truth;
    IdentOptions opts;
    opts.initial_current = 5.0;
    opts.max_evaluations = 8;
    const auto r = fit_circuit_params(trace, perturbed(truth, kIdentifiableParameters), {}, opts);
    CHECK_FALSE(r.converged);
    CHECK(r.evaluations <= 8);
    CHECK(std::isfinite(r.rmse_voltage));
}

TEST_CASE("simplex objective never increases")
{
    const auto trace = reference_trace(2e-7, 2.5e-3);
    const CellParams truth;
    IdentOptions opts;
    opts.strategy = SearchStrategy::SimplexFirst;
    opts.free_parameters = {CircuitParameter::R0, CircuitParameter::RSei, CircuitParameter::CDl};
    opts.initial_current = 5.0;
    opts.simplex_evaluations = 300;
    opts.polish = false;
    const auto r = fit_circuit_params(trace, perturbed(truth, opts.free_parameters), {}, opts);
    REQUIRE(r.simplex_history.size() > 10);
    for (std::size_t k = 1; k < r.simplex_history.size(); ++k)
        CHECK(r.simplex_history[k] <= r.simplex_history[k - 1]);
    CHECK(r.simplex_history.back() < r.simplex_history.front());
}

} // TEST_SUITE
