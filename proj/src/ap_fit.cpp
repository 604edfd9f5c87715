#include "ripple/errors.hpp"
#include "ripple/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace ripple {

double r_squared(std::span<const double> observed, std::span<const double> predicted)
{
    if (observed.empty() || observed.size() != predicted.size())
        throw ConfigError("r_squared: inputs must be non-empty and of equal length");
    const double mean = std::accumulate(observed.begin(), observed.end(), 0.0) / static_cast<double>(observed.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        ss_res += (observed[k] - predicted[k]) * (observed[k] - predicted[k]);
        ss_tot += (observed[k] - mean) * (observed[k] - mean);
    }
    if (ss_res == 0.0)
        return 1.0;
    return 1.0 - ss_res / ss_tot;
}

namespace {

struct LinearSolution {
    double intercept = 0.0; // ln a
    double slope = 0.0;     // b
    double sse = 0.0;
};

class ProfiledProblem {
public:
    ProfiledProblem(std::vector<double> f, std::vector<double> y) : f_(std::move(f)), y_(std::move(y))
    {
        y_mean_ = std::accumulate(y_.begin(), y_.end(), 0.0) / static_cast<double>(y_.size());
        x_.resize(f_.size());
    }

    std::size_t size() const { return f_.size(); }
    double f(std::size_t k) const { return f_[k]; }
    double y(std::size_t k) const { return y_[k]; }

    // Best (ln a, b) for a given log c, with its sum of squared log residuals.
    LinearSolution solve(double log_c)
    {
        const double c = std::exp(log_c);
        double x_mean = 0.0;
        for (std::size_t k = 0; k < f_.size(); ++k) {
            x_[k] = 1.0 / std::sqrt(c + f_[k] * f_[k]);
            x_mean += x_[k];
        }
        x_mean /= static_cast<double>(f_.size());
        double sxx = 0.0;
        double sxy = 0.0;
        double syy = 0.0;
        for (std::size_t k = 0; k < f_.size(); ++k) {
            const double dx = x_[k] - x_mean;
            const double dy = y_[k] - y_mean_;
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        LinearSolution s;
        s.slope = sxx > 0.0 ? sxy / sxx : 0.0;
        s.intercept = y_mean_ - s.slope * x_mean;
        s.sse = std::max(0.0, syy - s.slope * sxy);
        return s;
    }

    double sse(double ln_a, double b, double log_c) const
    {
        const double c = std::exp(log_c);
        double total = 0.0;
        for (std::size_t k = 0; k < f_.size(); ++k) {
            const double r = y_[k] - ln_a - b / std::sqrt(c + f_[k] * f_[k]);
            total += r * r;
        }
        return total;
    }

private:
    std::vector<double> f_;
    std::vector<double> y_;
    std::vector<double> x_;
    double y_mean_ = 0.0;
};

// Residuals r = y - ln a - b/sqrt(c + f^2) and Jacobian w.r.t. (ln a, b, ln c).
void residuals_and_jacobian(const ProfiledProblem& prob, const Eigen::Vector3d& theta, Eigen::VectorXd& r,
                            Eigen::MatrixXd& jac)
{
    const std::size_t n = prob.size();
    r.resize(static_cast<Eigen::Index>(n));
    jac.resize(static_cast<Eigen::Index>(n), 3);
    const double c = std::exp(theta[2]);
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double q = c + prob.f(k) * prob.f(k);
        const double x = 1.0 / std::sqrt(q);
        r[i] = prob.y(k) - theta[0] - theta[1] * x;
        jac(i, 0) = -1.0;
        jac(i, 1) = -x;
        jac(i, 2) = 0.5 * theta[1] * c * x / q;
    }
}

// Largest |J_j . r| / (|J_j| |y - mean(y)|): the gradient scaled by the column
// norms and the spread of the data, so it vanishes for exact fits as well.
double scaled_gradient(const Eigen::VectorXd& r, const Eigen::MatrixXd& jac, double spread)
{
    if (spread == 0.0)
        return 0.0;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < jac.cols(); ++j) {
        const double cn = jac.col(j).norm();
        if (cn > 0.0)
            worst = std::max(worst, std::abs(jac.col(j).dot(r)) / (cn * spread));
    }
    return worst;
}

} // namespace

ApFit fit_ap_model(const ApCurve& curve)
{
    if (curve.points.size() < 4)
        throw ConfigError("fit_ap_model: at least 4 points are required");
    for (const ApPoint& pt : curve.points) {
        if (!(pt.ap > 0.0) || !std::isfinite(pt.ap) || !(pt.frequency >= 0.0) || !std::isfinite(pt.frequency))
            throw ConfigError("fit_ap_model: AP values must be positive and frequencies non-negative");
    }

    // Canonical order makes the result independent of input ordering.
    std::vector<ApPoint> pts = curve.points;
    std::sort(pts.begin(), pts.end(), [](const ApPoint& l, const ApPoint& r) {
        return l.frequency < r.frequency || (l.frequency == r.frequency && l.ap < r.ap);
    });
    std::vector<double> freqs;
    std::vector<double> obs;
    std::vector<double> logs;
    for (const ApPoint& pt : pts) {
        freqs.push_back(pt.frequency);
        obs.push_back(pt.ap);
        logs.push_back(std::log(pt.ap));
    }

    ApFit fit;
    const auto [lo_it, hi_it] = std::minmax_element(obs.begin(), obs.end());
    if (*hi_it - *lo_it <= 1e-14 * *hi_it) {
        const double mean = std::accumulate(obs.begin(), obs.end(), 0.0) / static_cast<double>(obs.size());
        fit.model = {mean, 0.0, 0.0};
        std::vector<double> pred(obs.size(), mean);
        fit.r_squared = r_squared(obs, pred);
        double ss = 0.0;
        for (double v : obs)
            ss += (v - mean) * (v - mean);
        fit.residual_rms = std::sqrt(ss / static_cast<double>(obs.size()));
        fit.converged = true;
        fit.degenerate = true;
        return fit;
    }

    ProfiledProblem prob(freqs, logs);

    // Log grid over c spanning four decades of f^2 beyond the data on each side.
    const double f_lo = std::max(freqs.front(), 1e-3 * freqs.back());
    const double f_hi = freqs.back() > 0.0 ? freqs.back() : 1.0;
    const double s_lo = std::log(1e-4 * f_lo * f_lo);
    const double s_hi = std::log(1e4 * f_hi * f_hi);
    constexpr int kGrid = 400;
    const double step = (s_hi - s_lo) / kGrid;
    int best = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= kGrid; ++k) {
        const double sse = prob.solve(s_lo + step * k).sse;
        if (sse < best_sse) {
            best_sse = sse;
            best = k;
        }
    }
    const bool interior = best > 0 && best < kGrid;

    // Golden-section refinement inside the neighbouring grid cells.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = s_lo + step * std::max(best - 1, 0);
    double b = s_lo + step * std::min(best + 1, kGrid);
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = prob.solve(x1).sse;
    double f2 = prob.solve(x2).sse;
    std::size_t iterations = 0;
    while (b - a > 1e-10 * std::max(1.0, std::abs(a)) && iterations < 200) {
        ++iterations;
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = prob.solve(x1).sse;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = prob.solve(x2).sse;
        }
    }
    double log_c = f1 <= f2 ? x1 : x2;
    if (prob.solve(log_c).sse > best_sse)
        log_c = s_lo + step * best;
    const LinearSolution lin = prob.solve(log_c);

    // Damped Gauss-Newton polish on (ln a, b, ln c).
    Eigen::Vector3d theta(lin.intercept, lin.slope, log_c);
    double sse = prob.sse(theta[0], theta[1], theta[2]);
    double lambda = 1e-6;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    for (int it = 0; it < 200; ++it) {
        ++iterations;
        residuals_and_jacobian(prob, theta, r, jac);
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d g = jac.transpose() * r;
        bool accepted = false;
        while (lambda < 1e12) {
            Eigen::Matrix3d m = jtj;
            m.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
            const Eigen::Vector3d delta = m.ldlt().solve(-g);
            const Eigen::Vector3d trial = theta + delta;
            const double trial_sse = prob.sse(trial[0], trial[1], trial[2]);
            if (std::isfinite(trial_sse) && trial_sse <= sse) {
                const double gain = sse - trial_sse;
                theta = trial;
                sse = trial_sse;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = gain > 1e-15 * sse && delta.cwiseAbs().maxCoeff() > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted)
            break;
    }

    residuals_and_jacobian(prob, theta, r, jac);
    const double mean_log = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());
    double spread = 0.0;
    for (double y : logs)
        spread += (y - mean_log) * (y - mean_log);
    fit.gradient_norm = scaled_gradient(r, jac, std::sqrt(spread));
    fit.model = {std::exp(theta[0]), theta[1], std::exp(theta[2])};
    std::vector<double> pred;
    pred.reserve(freqs.size());
    double ss = 0.0;
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        pred.push_back(ap_model_eval(freqs[k], fit.model));
        ss += (obs[k] - pred.back()) * (obs[k] - pred.back());
    }
    fit.r_squared = r_squared(obs, pred);
    fit.residual_rms = std::sqrt(ss / static_cast<double>(obs.size()));
    fit.iterations = iterations;
    fit.converged = std::isfinite(fit.r_squared) && interior && fit.gradient_norm <= 1e-6;
    return fit;
}

} // namespace ripple
