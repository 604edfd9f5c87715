#include "ripple/commands.hpp"

#include "ripple/ageing.hpp"
#include "ripple/circuit.hpp"
#include "ripple/errors.hpp"
#include "ripple/io.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <numeric>
#include <string>

#include "CLI11.hpp"
#include <fmt/format.h>
#include <fmt/ostream.h>

namespace ripple::cli {

std::ostream& Context::output() const
{
    return stdout_stream ? *stdout_stream : std::cout;
}

std::ostream& Context::log() const
{
    return stderr_stream ? *stderr_stream : std::cerr;
}

namespace {

// Main output goes to --out when given, otherwise to stdout.
void emit(const Context& ctx, const std::string& content)
{
    if (ctx.out)
        write_file_atomic(*ctx.out, content);
    else
        ctx.output() << content;
}

// Human-readable summaries must not interleave with tabular stdout output.
std::ostream& summary_stream(const Context& ctx)
{
    return ctx.out ? ctx.output() : ctx.log();
}

} // namespace

int cmd_impedance(const Context& ctx, std::span<const double> freqs, double bias_eta)
{
    const CellParams& p = ctx.config.cell;
    const double fc = cutoff_frequency(p);
    const double z_dc = std::abs(impedance(0.0, p, bias_eta));

    Table t;
    t.meta = {{"bias_eta_v", format_number(bias_eta)}, {"cutoff_hz", format_number(fc)}};
    t.columns = {"f_hz", "re_ohm", "im_ohm", "abs_ohm", "phase_deg", "highpass_ohm"};
    t.data.assign(t.columns.size(), {});
    for (double f : freqs) {
        if (!(f >= 0.0) || !std::isfinite(f))
            throw ConfigError(fmt::format("--freqs: frequency {} must be non-negative", f));
        const std::complex<double> z = impedance(f, p, bias_eta);
        t.data[0].push_back(f);
        t.data[1].push_back(z.real());
        t.data[2].push_back(z.imag());
        t.data[3].push_back(std::abs(z));
        t.data[4].push_back(std::arg(z) * 180.0 / std::numbers::pi);
        t.data[5].push_back(z_dc * intercalation_divider(f, fc));
    }
    emit(ctx, render(t, ctx.format()));
    return kExitOk;
}

int cmd_simulate(const Context& ctx, const SimulateRequest& request)
{
    const CellParams& p = ctx.config.cell;
    if (!(request.duration > 0.0))
        throw ConfigError("--duration must be positive");
    if (request.stride < 1)
        throw ConfigError("--stride must be at least 1");
    try {
        request.profile.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("invalid load profile (--profile/--i-dc/--i-ac/--frequency/--duty/--slew-rate): {}",
                                      e.what()));
    }
    const double dt = request.dt > 0.0 ? request.dt : default_time_step(request.profile);
    const double limit = max_time_step(request.profile, p);
    if (dt > limit * (1.0 + 1e-12))
        throw ConfigError(fmt::format("--dt {:.6g} s exceeds the stable limit {:.6g} s", dt, limit));
    if (request.duration < dt)
        throw ConfigError("--duration must be at least one time step");

    const CellState initial = request.from_rest ? CellState{} : dc_steady_state(request.profile.i_dc, p);
    const SimulationResult sim = simulate(request.profile, p, {dt, request.duration, 0.0, request.stride}, initial);
    const SimulationTrace& tr = sim.trace;

    Table t = trace_table(tr);
    t.meta = {{"profile", std::string(to_string(request.profile.kind))},
              {"i_dc", format_number(request.profile.i_dc)},
              {"i_ac", format_number(request.profile.i_ac)},
              {"frequency_hz", format_number(request.profile.frequency)},
              {"dt_s", format_number(dt)},
              {"stride", std::to_string(request.stride)},
              {"cell_fingerprint", cell_fingerprint(p)}};
    emit(ctx, render(t, ctx.format()));

    const auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const auto [vmin, vmax] = std::minmax_element(tr.v_terminal.begin(), tr.v_terminal.end());
    std::ostream& s = summary_stream(ctx);
    fmt::print(s, "samples={}\nmean_v_terminal_v={}\nmin_v_terminal_v={}\nmax_v_terminal_v={}\nmean_eta_ct_v={}\n",
               tr.size(), format_number(mean(tr.v_terminal)), format_number(*vmin), format_number(*vmax),
               format_number(mean(tr.eta_ct)));
    return kExitOk;
}

int cmd_sweep(const Context& ctx)
{
    const RunConfig& c = ctx.config;
    const std::vector<double> freqs = log_frequency_grid(c.sweep.f_min, c.sweep.f_max, c.sweep.points_per_decade);
    SweepOptions opts;
    opts.periodic.max_dt = c.sim.dt;
    opts.periodic.tolerance = c.sim.tolerance;
    opts.periodic.max_cycles = c.sim.max_cycles;
    opts.periodic.trace_stride = 0;
    opts.jobs = ctx.jobs;
    if (ctx.verbose)
        fmt::print(ctx.log(), "sweep: {} frequencies from {} Hz to {} Hz, i_dc={} A, i_ac={} A\n", freqs.size(),
                   c.sweep.f_min, c.sweep.f_max, c.sweep.i_dc, c.sweep.i_ac);
    const ApCurve curve = ageing_sweep(freqs, c.sweep.i_dc, c.sweep.i_ac, c.cell, opts);

    Table t = ap_curve_table(curve);
    t.meta.emplace_back("points_per_decade", std::to_string(c.sweep.points_per_decade));
    t.meta.emplace_back("cutoff_hz", format_number(cutoff_frequency(c.cell)));
    emit(ctx, render(t, ctx.format()));
    return kExitOk;
}

int cmd_fit_ap(const Context& ctx, const std::filesystem::path& curve_file)
{
    const ApCurve curve = ap_curve_from_table(read_table(curve_file));
    const ApFit fit = fit_ap_model(curve);

    fmt::print(ctx.output(), "a={}\nb={}\nc={}\nr_squared={}\nresidual_rms={}\niterations={}\nconverged={}\n",
               format_number(fit.model.a), format_number(fit.model.b), format_number(fit.model.c),
               format_number(fit.r_squared), format_number(fit.residual_rms), fit.iterations, fit.converged);
    if (ctx.out) {
        Table t;
        t.meta = {{"source", curve_file.string()}, {"degenerate", fit.degenerate ? "true" : "false"}};
        t.columns = {"a", "b", "c", "r_squared", "residual_rms", "iterations", "converged"};
        t.data = {{fit.model.a}, {fit.model.b}, {fit.model.c}, {fit.r_squared}, {fit.residual_rms},
                  {static_cast<double>(fit.iterations)}, {fit.converged ? 1.0 : 0.0}};
        write_file_atomic(*ctx.out, render(t, ctx.format()));
    }
    return fit.converged ? kExitOk : kExitNumeric;
}

int cmd_fit_circuit(const Context& ctx, const FitCircuitRequest& request)
{
    const MeasuredTrace trace = measured_trace_from_table(read_table(request.trace_file));
    IdentOptions opts;
    opts.free_parameters = request.free_parameters;
    opts.initial_current = request.initial_current;
    opts.max_evaluations = request.max_evaluations;
    const IdentResult result = fit_circuit_params(trace, ctx.config.cell, {}, opts);

    RunConfig identified = ctx.config;
    identified.cell = result.params;
    emit(ctx, fmt::format("# identified from {}: rmse_v={} evaluations={} converged={}\n", request.trace_file.string(),
                          format_number(result.rmse_voltage), result.evaluations, result.converged) +
                  format_config(identified));

    std::ostream& s = summary_stream(ctx);
    fmt::print(s, "rmse_voltage_v={}\nevaluations={}\nconverged={}\n", format_number(result.rmse_voltage),
               result.evaluations, result.converged);
    for (const auto& [param, hit] : result.bounds_hit) {
        if (hit)
            fmt::print(s, "bound_hit={}\n", parameter_name(param));
    }
    return result.converged ? kExitOk : kExitNumeric;
}

namespace {

std::vector<double> parse_number_list(const std::string& text, const char* flag)
{
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = std::min(text.find(',', pos), text.size());
        const std::string item = text.substr(pos, end - pos);
        pos = end + 1;
        if (item.find_first_not_of(" \t") == std::string::npos)
            continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos)
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(fmt::format("{}: '{}' is not a number", flag, item));
        }
    }
    return out;
}

std::vector<CircuitParameter> parse_parameter_list(const std::string& text)
{
    std::vector<CircuitParameter> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = std::min(text.find(',', pos), text.size());
        const std::string item = text.substr(pos, end - pos);
        pos = end + 1;
        const auto param = parameter_from_name(item);
        if (!param)
            throw ConfigError(fmt::format("--free: unknown parameter '{}'", item));
        out.push_back(*param);
    }
    return out;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Ripple-current ageing potential toolkit", "ripple"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_path;
    std::string format;
    unsigned jobs = 0;
    bool verbose = false;
    app.add_option("--config", config_path, "cell/sweep/sim/output configuration file");
    app.add_option("--out", out_path, "output file (default: stdout)");
    app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--jobs", jobs, "sweep worker threads (default: all processors)");
    app.add_flag("--verbose", verbose, "progress on stderr");

    auto* imp = app.add_subcommand("impedance", "small-signal impedance over a frequency grid");
    std::string freqs_text;
    bool include_dc = false;
    double bias_eta = 0.0;
    auto* freqs_opt = imp->add_option("--freqs", freqs_text, "comma-separated frequencies [Hz] (default: sweep grid)");
    imp->add_flag("--dc", include_dc, "prepend f = 0");
    imp->add_option("--bias-eta", bias_eta, "over-potential of the linearisation point [V]");

    auto* sim = app.add_subcommand("simulate", "time-domain simulation of a load profile");
    std::string profile_kind = "dc";
    std::optional<double> i_dc;
    std::optional<double> i_ac;
    double frequency = 1000.0;
    double duty = 0.5;
    double slew = 1e6;
    std::optional<double> duration;
    std::optional<double> dt;
    std::optional<std::size_t> stride;
    bool from_rest = false;
    sim->add_option("--profile", profile_kind, "dc, sine or rect")->check(CLI::IsMember({"dc", "sine", "rect"}));
    sim->add_option("--i-dc", i_dc, "mean current [A] (default: [sweep] i_dc)");
    sim->add_option("--i-ac", i_ac, "ripple amplitude [A] (default: [sweep] i_ac)");
    sim->add_option("--frequency", frequency, "ripple frequency [Hz]");
    sim->add_option("--duty", duty, "rect duty cycle");
    sim->add_option("--slew-rate", slew, "rect edge slope [A/s]");
    sim->add_option("--duration", duration, "simulated time [s] (default: [sim] duration)");
    sim->add_option("--dt", dt, "time step [s] (default: [sim] dt, 0 = automatic)");
    sim->add_option("--stride", stride, "keep every n-th step (default: [output] stride)");
    sim->add_flag("--from-rest", from_rest, "start from the zero state");

    auto* sweep = app.add_subcommand("sweep", "ageing potential over the configured frequency grid");

    auto* fit_ap = app.add_subcommand("fit-ap", "fit AP = a*exp(b/sqrt(c+f^2)) to a sweep file");
    std::string curve_file;
    fit_ap->add_option("curve", curve_file, "sweep output (csv or json)")->required();

    auto* fit_circuit = app.add_subcommand("fit-circuit", "identify circuit parameters from a t_s,i_a,v_v trace");
    std::string trace_file;
    std::string free_text;
    std::optional<double> initial_current;
    std::size_t max_evals = 5000;
    fit_circuit->add_option("trace", trace_file, "measured trace CSV")->required();
    fit_circuit->add_option("--free", free_text, "comma-separated free parameters (default: all)");
    fit_circuit->add_option("--initial-current", initial_current, "DC preconditioning current [A]");
    fit_circuit->add_option("--max-evals", max_evals, "simulation budget");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        Context ctx;
        ctx.config = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (!format.empty())
            ctx.config.output.format = output_format_from_string(format);
        if (!out_path.empty())
            ctx.out = out_path;
        else if (!ctx.config.output.path.empty())
            ctx.out = ctx.config.output.path;
        ctx.jobs = jobs;
        ctx.verbose = verbose;
        ctx.stdout_stream = &out;
        ctx.stderr_stream = &err;

        if (*imp) {
            std::vector<double> freqs;
            if (freqs_opt->count() > 0)
                freqs = parse_number_list(freqs_text, "--freqs");
            else
                freqs = log_frequency_grid(ctx.config.sweep.f_min, ctx.config.sweep.f_max,
                                           ctx.config.sweep.points_per_decade);
            if (include_dc)
                freqs.insert(freqs.begin(), 0.0);
            return cmd_impedance(ctx, freqs, bias_eta);
        }
        if (*sim) {
            SimulateRequest req;
            const double mean = i_dc.value_or(ctx.config.sweep.i_dc);
            const double amp = i_ac.value_or(ctx.config.sweep.i_ac);
            switch (profile_kind_from_string(profile_kind)) {
            case ProfileKind::Dc:
                req.profile = LoadProfile::dc(mean);
                break;
            case ProfileKind::Sine:
                req.profile = LoadProfile::sine(mean, amp, frequency);
                break;
            case ProfileKind::Rect:
                req.profile = LoadProfile::rect(mean, amp, frequency, duty, slew);
                break;
            }
            req.duration = duration.value_or(ctx.config.sim.duration);
            req.dt = dt.value_or(ctx.config.sim.dt);
            req.stride = stride.value_or(ctx.config.output.stride);
            req.from_rest = from_rest;
            return cmd_simulate(ctx, req);
        }
        if (*sweep)
            return cmd_sweep(ctx);
        if (*fit_ap)
            return cmd_fit_ap(ctx, curve_file);
        if (*fit_circuit) {
            FitCircuitRequest req;
            req.trace_file = trace_file;
            if (!free_text.empty())
                req.free_parameters = parse_parameter_list(free_text);
            req.initial_current = initial_current;
            req.max_evaluations = max_evals;
            return cmd_fit_circuit(ctx, req);
        }
    } catch (const ConfigError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitNumeric;
    }
    return kExitUsage;
}

} // namespace ripple::cli
