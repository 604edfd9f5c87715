#include "ripple/detail/rk4.hpp"
#include "ripple/errors.hpp"
#include "ripple/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace ripple {

std::string_view parameter_name(CircuitParameter param)
{
    switch (param) {
    case CircuitParameter::R0: return "r0";
    case CircuitParameter::L0: return "l0";
    case CircuitParameter::RSei: return "r_sei";
    case CircuitParameter::CSei: return "c_sei";
    case CircuitParameter::CDl: return "c_dl";
    case CircuitParameter::RW1: return "rw1";
    case CircuitParameter::CW1: return "cw1";
    case CircuitParameter::RW2: return "rw2";
    case CircuitParameter::CW2: return "cw2";
    case CircuitParameter::ExchangeCurrent: return "i0_int";
    case CircuitParameter::TransferCoeff: return "alpha_int";
    }
    return "";
}

std::optional<CircuitParameter> parameter_from_name(std::string_view name)
{
    for (CircuitParameter p : kIdentifiableParameters) {
        if (parameter_name(p) == name)
            return p;
    }
    return std::nullopt;
}

namespace {

template <class Params>
auto* parameter_slot(Params& p, CircuitParameter param)
{
    switch (param) {
    case CircuitParameter::R0: return &p.r0;
    case CircuitParameter::L0: return &p.l0;
    case CircuitParameter::RSei: return &p.r_sei;
    case CircuitParameter::CSei: return &p.c_sei;
    case CircuitParameter::CDl: return &p.c_dl;
    case CircuitParameter::RW1: return &p.rw1;
    case CircuitParameter::CW1: return &p.cw1;
    case CircuitParameter::RW2: return &p.rw2;
    case CircuitParameter::CW2: return &p.cw2;
    case CircuitParameter::ExchangeCurrent: return &p.electrochem.exchange_current;
    case CircuitParameter::TransferCoeff: return &p.electrochem.transfer_coeff;
    }
    return static_cast<decltype(&p.r0)>(nullptr);
}

} // namespace

double get_parameter(const CellParams& p, CircuitParameter param)
{
    return *parameter_slot(p, param);
}

void set_parameter(CellParams& p, CircuitParameter param, double value)
{
    *parameter_slot(p, param) = value;
}

void MeasuredTrace::validate() const
{
    if (time.size() != current.size() || time.size() != voltage.size())
        throw ConfigError("trace: columns must have equal length");
    if (time.size() < 2)
        throw ConfigError("trace: at least two samples are required");
    const double step = dt();
    if (!(step > 0.0) || !std::isfinite(step))
        throw ConfigError("trace: time must increase");
    for (std::size_t k = 1; k < time.size(); ++k) {
        if (std::abs((time[k] - time[k - 1]) - step) > 1e-6 * step)
            throw ConfigError(fmt::format("trace: non-uniform sampling at row {}", k));
    }
    for (std::size_t k = 0; k < time.size(); ++k) {
        if (!std::isfinite(current[k]) || !std::isfinite(voltage[k]))
            throw ConfigError(fmt::format("trace: non-finite value at row {}", k));
    }
}

double MeasuredTrace::dt() const
{
    return (time.back() - time.front()) / static_cast<double>(time.size() - 1);
}

ParameterBounds default_bounds(CircuitParameter param, double initial)
{
    if (param == CircuitParameter::TransferCoeff)
        return {std::max(initial / 3.0, 0.01), std::min(initial * 3.0, 0.99)};
    return {initial / 3.0, initial * 3.0};
}

namespace {

// Measured current between samples: linear interpolation at half steps,
// forward-difference slope (exact for piecewise-linear records sampled at corners).
class SampledCurrent {
public:
    explicit SampledCurrent(const MeasuredTrace& trace) : trace_(trace), t0_(trace.time.front()), dt_(trace.dt()) {}

    ProfileSample operator()(double t) const
    {
        const auto& i = trace_.current;
        const long long last = static_cast<long long>(i.size()) - 1;
        const long long h = std::clamp(std::llround(2.0 * (t - t0_) / dt_), 0LL, 2 * last);
        const auto k = static_cast<std::size_t>(h / 2);
        if (h % 2 != 0)
            return {0.5 * (i[k] + i[k + 1]), (i[k + 1] - i[k]) / dt_};
        if (static_cast<long long>(k) < last)
            return {i[k], (i[k + 1] - i[k]) / dt_};
        return {i[k], (i[k] - i[k - 1]) / dt_};
    }

private:
    const MeasuredTrace& trace_;
    double t0_;
    double dt_;
};

} // namespace

std::vector<double> predict_voltage(const MeasuredTrace& trace, const CellParams& p, double initial_current)
{
    const double dt = trace.dt();
    const double limit = p.min_time_constant() / 10.0;
    if (!(dt <= limit * (1.0 + 1e-12)))
        throw ConfigError(fmt::format("trace step {:.6g} s exceeds the stable limit {:.6g} s", dt, limit));
    std::vector<double> v(trace.time.size());
    const SampledCurrent source(trace);
    detail::integrate_rk4(p, source, dc_steady_state(initial_current, p), trace.time.front(), dt,
                          trace.time.size() - 1, [&](const detail::StepPoint& pt) {
                              v[pt.index] = terminal_voltage(pt.state, pt.load.current, pt.load.slope, p);
                          });
    return v;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class IdentProblem {
public:
    IdentProblem(const MeasuredTrace& trace, const CellParams& initial, std::vector<CircuitParameter> free,
                 const BoundsMap& bounds, double initial_current)
        : trace_(trace), base_(initial), free_(std::move(free)), initial_current_(initial_current)
    {
        for (CircuitParameter param : free_) {
            const double x0 = get_parameter(initial, param);
            if (!(x0 > 0.0))
                throw ConfigError(fmt::format("identification: initial {} must be positive", parameter_name(param)));
            const auto it = bounds.find(param);
            const ParameterBounds b = it != bounds.end() ? it->second : default_bounds(param, x0);
            if (!(b.lower > 0.0 && b.lower <= x0 && x0 <= b.upper))
                throw ConfigError(fmt::format("identification: initial {} = {:.6g} outside bounds [{:.6g}, {:.6g}]",
                                              parameter_name(param), x0, b.lower, b.upper));
            bounds_.push_back(b);
            lower_.push_back(std::log(b.lower));
            upper_.push_back(std::log(b.upper));
        }
    }

    std::size_t dims() const { return free_.size(); }
    std::size_t evaluations() const { return evaluations_; }

    Eigen::VectorXd initial_theta() const
    {
        Eigen::VectorXd theta(static_cast<Eigen::Index>(dims()));
        for (std::size_t j = 0; j < dims(); ++j)
            theta[static_cast<Eigen::Index>(j)] = std::log(get_parameter(base_, free_[j]));
        return theta;
    }

    Eigen::VectorXd clamp(Eigen::VectorXd theta) const
    {
        for (std::size_t j = 0; j < dims(); ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            theta[i] = std::clamp(theta[i], lower_[j], upper_[j]);
        }
        return theta;
    }

    CellParams params(const Eigen::VectorXd& theta) const
    {
        CellParams p = base_;
        for (std::size_t j = 0; j < dims(); ++j)
            set_parameter(p, free_[j],
                          std::clamp(std::exp(theta[static_cast<Eigen::Index>(j)]), bounds_[j].lower, bounds_[j].upper));
        return p;
    }

    // Residual vector predicted - measured; false if the candidate cannot be simulated.
    bool residuals(const Eigen::VectorXd& theta, Eigen::VectorXd& r)
    {
        ++evaluations_;
        try {
            const CellParams p = params(theta);
            p.validate();
            const std::vector<double> v = predict_voltage(trace_, p, initial_current_);
            r.resize(static_cast<Eigen::Index>(v.size()));
            for (std::size_t k = 0; k < v.size(); ++k)
                r[static_cast<Eigen::Index>(k)] = v[k] - trace_.voltage[k];
            return r.allFinite();
        } catch (const std::exception&) {
            return false;
        }
    }

    double rmse(const Eigen::VectorXd& theta)
    {
        Eigen::VectorXd r;
        if (!residuals(theta, r))
            return kInf;
        return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
    }

    bool at_bound(const Eigen::VectorXd& theta, std::size_t j) const
    {
        const double t = theta[static_cast<Eigen::Index>(j)];
        return std::abs(t - lower_[j]) <= 1e-9 || std::abs(t - upper_[j]) <= 1e-9;
    }

    double upper(std::size_t j) const { return upper_[j]; }

    CircuitParameter parameter(std::size_t j) const { return free_[j]; }

private:
    const MeasuredTrace& trace_;
    CellParams base_;
    std::vector<CircuitParameter> free_;
    std::vector<ParameterBounds> bounds_;
    std::vector<double> lower_; ///< log space
    std::vector<double> upper_;
    double initial_current_;
    std::size_t evaluations_ = 0;
};

struct SearchState {
    Eigen::VectorXd theta;
    double rmse = kInf;
    bool converged = false;
};

// Nelder-Mead over the clamped log-parameter box.
SearchState nelder_mead(IdentProblem& prob, const Eigen::VectorXd& start, double step, double tol,
                        std::size_t budget, std::vector<double>& history)
{
    const std::size_t n = prob.dims();
    const std::size_t stop_at = prob.evaluations() + budget;
    std::vector<Eigen::VectorXd> simplex;
    std::vector<double> values;
    simplex.push_back(prob.clamp(start));
    values.push_back(prob.rmse(simplex.back()));
    for (std::size_t j = 0; j < n; ++j) {
        if (prob.evaluations() >= stop_at) {
            const auto best = std::min_element(values.begin(), values.end()) - values.begin();
            return {simplex[static_cast<std::size_t>(best)], values[static_cast<std::size_t>(best)], false};
        }
        Eigen::VectorXd v = simplex.front();
        const auto i = static_cast<Eigen::Index>(j);
        // step inward when the upper bound is in the way
        v[i] += v[i] + step <= prob.upper(j) ? step : -step;
        simplex.push_back(prob.clamp(v));
        values.push_back(prob.rmse(simplex.back()));
    }

    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<Eigen::VectorXd> s2;
        std::vector<double> v2;
        for (std::size_t k : order) {
            s2.push_back(simplex[k]);
            v2.push_back(values[k]);
        }
        simplex = std::move(s2);
        values = std::move(v2);
    };

    SearchState out;
    sort_simplex();
    while (prob.evaluations() < stop_at) {
        double spread = 0.0;
        for (std::size_t k = 1; k <= n; ++k)
            spread = std::max(spread, (simplex[k] - simplex[0]).cwiseAbs().maxCoeff());
        if (spread < tol) {
            out.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < n; ++k)
            centroid += simplex[k];
        centroid /= static_cast<double>(n);

        const Eigen::VectorXd& worst = simplex[n];
        const Eigen::VectorXd reflected = prob.clamp(centroid + (centroid - worst));
        const double f_r = prob.rmse(reflected);
        if (f_r < values[0]) {
            const Eigen::VectorXd expanded = prob.clamp(centroid + 2.0 * (centroid - worst));
            const double f_e = prob.rmse(expanded);
            if (f_e < f_r) {
                simplex[n] = expanded;
                values[n] = f_e;
            } else {
                simplex[n] = reflected;
                values[n] = f_r;
            }
        } else if (f_r < values[n - 1]) {
            simplex[n] = reflected;
            values[n] = f_r;
        } else {
            const bool outside = f_r < values[n];
            const Eigen::VectorXd contracted =
                prob.clamp(outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                                   : Eigen::VectorXd(centroid + 0.5 * (worst - centroid)));
            const double f_c = prob.rmse(contracted);
            if (f_c < (outside ? f_r : values[n])) {
                simplex[n] = contracted;
                values[n] = f_c;
            } else {
                for (std::size_t k = 1; k <= n; ++k) {
                    simplex[k] = simplex[0] + 0.5 * (simplex[k] - simplex[0]);
                    values[k] = prob.rmse(simplex[k]);
                }
            }
        }
        sort_simplex();
        history.push_back(values[0]);
    }
    out.theta = simplex[0];
    out.rmse = values[0];
    return out;
}

// Levenberg-Marquardt with a forward-difference Jacobian in log space.
SearchState levenberg_marquardt(IdentProblem& prob, SearchState start, std::size_t budget)
{
    const std::size_t n = prob.dims();
    const std::size_t stop_at = prob.evaluations() + budget;
    constexpr double kStep = 1e-6;
    constexpr double kStepTolerance = 1e-8; // log space, i.e. relative

    SearchState best = start;
    Eigen::VectorXd r;
    if (!prob.residuals(best.theta, r))
        return best;
    double sse = r.squaredNorm();
    const auto samples = static_cast<double>(r.size());
    best.rmse = std::sqrt(sse / samples);
    best.converged = false;
    double lambda = 1e-3;

    Eigen::MatrixXd jac(r.size(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd rj;
    while (prob.evaluations() + n + 1 <= stop_at) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto i = static_cast<Eigen::Index>(j);
            Eigen::VectorXd probe = best.theta;
            const double h = probe[i] + kStep <= prob.upper(j) ? kStep : -kStep;
            probe[i] += h;
            if (!prob.residuals(probe, rj))
                return best;
            jac.col(i) = (rj - r) / h;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;

        bool accepted = false;
        bool stalled = false;
        while (prob.evaluations() < stop_at && lambda < 1e16) {
            Eigen::MatrixXd m = jtj;
            m.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
            const Eigen::VectorXd trial = prob.clamp(best.theta + m.ldlt().solve(-g));
            const double step = (trial - best.theta).cwiseAbs().maxCoeff();
            if (step < kStepTolerance) {
                stalled = true;
                break;
            }
            Eigen::VectorXd rt;
            if (prob.residuals(trial, rt) && rt.squaredNorm() < sse) {
                const double gain = sse - rt.squaredNorm();
                best.theta = trial;
                r = rt;
                sse = r.squaredNorm();
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                stalled = gain <= 1e-14 * sse;
                break;
            }
            lambda *= 10.0;
        }
        best.rmse = std::sqrt(sse / samples);
        if (stalled || (!accepted && prob.evaluations() < stop_at)) {
            best.converged = true;
            break;
        }
        if (!accepted)
            break;
    }
    return best;
}

} // namespace

IdentResult fit_circuit_params(const MeasuredTrace& trace, const CellParams& initial, const BoundsMap& bounds,
                               const IdentOptions& options)
{
    trace.validate();
    initial.validate();
    if (options.free_parameters.empty())
        throw ConfigError("identification: no free parameters");
    const double initial_current = options.initial_current.value_or(trace.current.front());
    IdentProblem prob(trace, initial, options.free_parameters, bounds, initial_current);

    IdentResult result;
    SearchState state{prob.clamp(prob.initial_theta())};
    const auto remaining = [&] {
        return options.max_evaluations > prob.evaluations() ? options.max_evaluations - prob.evaluations() : 0;
    };
    if (options.strategy == SearchStrategy::MarquardtFirst) {
        state = levenberg_marquardt(prob, state, remaining());
        if (!state.converged && remaining() > 0)
            state = nelder_mead(prob, state.theta, options.initial_step, options.simplex_tolerance, remaining(),
                                result.simplex_history);
    } else {
        state = nelder_mead(prob, state.theta, options.initial_step, options.simplex_tolerance,
                            std::min(options.simplex_evaluations, remaining()), result.simplex_history);
        if (options.polish && remaining() > 0)
            state = levenberg_marquardt(prob, state, remaining());
    }

    if (!std::isfinite(state.rmse))
        throw NumericError("identification: no simulable parameter set found");
    result.params = prob.params(state.theta);
    result.rmse_voltage = state.rmse;
    result.evaluations = prob.evaluations();
    result.converged = state.converged;
    for (std::size_t j = 0; j < prob.dims(); ++j)
        result.bounds_hit[prob.parameter(j)] = prob.at_bound(state.theta, j);
    return result;
}

} // namespace ripple
