#include "ripple/ageing.hpp"

#include "ripple/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include <fmt/format.h>

namespace ripple {

void ApCurve::validate() const
{
    for (std::size_t k = 0; k < points.size(); ++k) {
        const ApPoint& pt = points[k];
        if (!(pt.frequency > 0.0) || !std::isfinite(pt.frequency))
            throw ConfigError(fmt::format("ap curve: frequency at row {} must be positive", k));
        if (k > 0 && !(pt.frequency > points[k - 1].frequency))
            throw ConfigError(fmt::format("ap curve: frequencies must increase strictly (row {})", k));
        if (!(pt.ap > 0.0) || !std::isfinite(pt.ap))
            throw ConfigError(fmt::format("ap curve: AP at row {} must be finite and positive", k));
    }
}

std::vector<double> ApCurve::frequencies() const
{
    std::vector<double> out;
    out.reserve(points.size());
    for (const ApPoint& pt : points)
        out.push_back(pt.frequency);
    return out;
}

std::vector<double> ApCurve::values() const
{
    std::vector<double> out;
    out.reserve(points.size());
    for (const ApPoint& pt : points)
        out.push_back(pt.ap);
    return out;
}

double ageing_potential_at(double f, double i_dc, double i_ac, const CellParams& p,
                           const PeriodicOptions& options)
{
    if (!(f > 0.0))
        throw ConfigError("ageing potential: frequency must be positive");
    if (!(i_ac >= 0.0))
        throw ConfigError("ageing potential: i_ac must be non-negative");

    const LoadProfile profile = i_ac == 0.0 ? LoadProfile::dc(i_dc) : LoadProfile::sine(i_dc, i_ac, f);
    const PeriodicResult run = run_to_periodic_steady_state(profile, p, options);
    if (!run.converged) {
        throw ConvergenceError(fmt::format("ageing potential at {:.6g} Hz: no periodic steady state after "
                                           "{} cycles (residual {:.3g})",
                                           f, run.cycles, run.residual),
                               run.residual);
    }
    return run.mean_relative_ageing;
}

ApCurve ageing_sweep(std::span<const double> freqs, double i_dc, double i_ac, const CellParams& p,
                     const SweepOptions& options)
{
    p.validate();
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        if (!(freqs[k] > 0.0) || (k > 0 && !(freqs[k] > freqs[k - 1])))
            throw ConfigError("sweep: frequencies must be positive and strictly increasing");
    }

    ApCurve curve;
    curve.meta = {i_dc, i_ac, ProfileKind::Sine, cell_fingerprint(p)};
    curve.points.resize(freqs.size());

    std::vector<std::optional<std::string>> failures(freqs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < freqs.size(); k = next++) {
            try {
                curve.points[k] = {freqs[k], ageing_potential_at(freqs[k], i_dc, i_ac, p, options.periodic)};
            } catch (const std::exception& e) {
                failures[k] = e.what();
            }
        }
    };

    unsigned jobs = options.jobs > 0 ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(freqs.size(), 1)));
    std::vector<std::jthread> pool;
    for (unsigned j = 1; j < jobs; ++j)
        pool.emplace_back(worker);
    worker();
    pool.clear();

    std::string message;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        if (failures[k])
            message += fmt::format("\n  {:.6g} Hz: {}", freqs[k], *failures[k]);
    }
    if (!message.empty())
        throw NumericError("sweep failed at:" + message);
    return curve;
}

double ap_model_eval(double f, const ApModel& m)
{
    const double denom = m.c + f * f;
    if (!(denom > 0.0))
        throw DomainError("ap_model_eval: c + f^2 must be positive");
    return m.a * std::exp(m.b / std::sqrt(denom));
}

std::vector<double> log_frequency_grid(double f_min, double f_max, unsigned points_per_decade)
{
    if (!(f_min > 0.0) || !(f_max > f_min) || points_per_decade < 1)
        throw ConfigError("frequency grid needs 0 < f_min < f_max and points_per_decade >= 1");
    const double lo = std::log10(f_min);
    const double hi = std::log10(f_max);
    const auto intervals = std::max<long long>(1, std::llround((hi - lo) * points_per_decade));
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(intervals) + 1);
    grid.push_back(f_min);
    for (long long k = 1; k < intervals; ++k)
        grid.push_back(std::pow(10.0, lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(intervals)));
    grid.push_back(f_max);
    return grid;
}

std::string cell_fingerprint(const CellParams& p)
{
    const auto& e = p.electrochem;
    const auto& s = p.side_reactions;
    const std::string text = fmt::format(
        "{:.17g}|{:.17g}|{:.17g}|{:.17g}|{:.17g}|{:.17g}|{:.17g}|{:.17g}|{:.17g}|{:.17g}|"
        "{:.17g}|{:.17g}|{}|{:.17g}|{:.17g}|{:.17g}|"
        "{:.17g}|{:.17g}|{:.17g}|{:.17g}|{:.17g}|{:.17g}",
        p.v_ocv, p.r0, p.l0, p.r_sei, p.c_sei, p.c_dl, p.rw1, p.cw1, p.rw2, p.cw2, e.exchange_current,
        e.transfer_coeff, e.electrons, e.temperature, e.ageing_alpha, e.ageing_prefactor, s.ec.rate_prefactor,
        s.ec.cathodic_alpha, s.dmc.rate_prefactor, s.dmc.cathodic_alpha, s.plating.rate_prefactor,
        s.plating.cathodic_alpha);
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

} // namespace ripple
