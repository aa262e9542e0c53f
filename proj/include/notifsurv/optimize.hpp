#pragma once

// Full-batch smooth minimization: L-BFGS with a strong-Wolfe line search,
// and steepest descent with the same line search as a fallback.

#include "notifsurv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace notifsurv {

enum class OptMethod { Lbfgs, GradientDescent };

struct OptConfig {
    double tol = 1e-7;    // max-norm of the gradient at convergence
    int max_iters = 1000;
    double ridge = 1e-6;  // L2 penalty on non-intercept coefficients (standardized scale)
    std::uint64_t seed = 0; // the full-batch methods are deterministic and do not draw from it
    OptMethod method = OptMethod::Lbfgs;
    int memory = 10;

    void validate() const
    {
        if (!(tol > 0.0) || !std::isfinite(tol)) {
            throw ConfigError("opt tol must be positive");
        }
        if (max_iters <= 0) {
            throw ConfigError("opt max_iters must be positive");
        }
        if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
            throw ConfigError("opt ridge must be non-negative");
        }
        if (memory <= 0) {
            throw ConfigError("opt memory must be positive");
        }
    }
};

struct OptResult {
    std::vector<double> x;
    double value = 0.0;
    double grad_max_norm = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string message;
    std::vector<double> history; // objective after each accepted iteration, history[0] at x0
};

namespace detail {

inline double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

inline double dot_span(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

// Minimizer of the cubic interpolating (a, fa, ga), (b, fb, gb), clamped to
// the interior of [a, b]; falls back to bisection.
inline double cubic_step(double a, double fa, double ga, double b, double fb, double gb)
{
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    double t = 0.5 * (a + b);
    if (disc >= 0.0 && std::isfinite(disc)) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = gb - ga + 2.0 * d2;
        if (denom != 0.0) {
            t = b - (b - a) * (gb + d2 - d1) / denom;
        }
    }
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    if (!std::isfinite(t) || t < lo + margin || t > hi - margin) {
        t = 0.5 * (a + b);
    }
    return t;
}

template <typename F>
struct LineSearch {
    F& f;
    std::span<const double> x0;
    std::span<const double> dir;
    std::vector<double> x;
    std::vector<double> g;
    int evaluations = 0;
    double value = 0.0; // objective at x

    struct Point {
        double step, value, slope;
    };

    Point eval(double step)
    {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = x0[i] + step * dir[i];
        }
        const double v = f(std::span<const double>(x), std::span<double>(g));
        ++evaluations;
        value = v;
        const double s = dot_span(g, dir);
        if (!std::isfinite(v) || !std::isfinite(s)) {
            return {step, std::numeric_limits<double>::infinity(), 0.0};
        }
        return {step, v, s};
    }

    // Returns true with x/g holding the accepted point.
    bool run(double f0, double slope0, double step, double c1 = 1e-4, double c2 = 0.9)
    {
        x.assign(x0.size(), 0.0);
        g.assign(x0.size(), 0.0);
        Point prev{0.0, f0, slope0};
        for (int i = 0; i < 40; ++i) {
            Point cur = eval(step);
            if (cur.value > f0 + c1 * cur.step * slope0 || (i > 0 && cur.value >= prev.value)) {
                return zoom(prev, cur, f0, slope0, c1, c2);
            }
            if (std::abs(cur.slope) <= -c2 * slope0) {
                return true;
            }
            if (cur.slope >= 0.0) {
                return zoom(cur, prev, f0, slope0, c1, c2);
            }
            prev = cur;
            step *= 2.0;
        }
        return false;
    }

    bool zoom(Point lo, Point hi, double f0, double slope0, double c1, double c2)
    {
        for (int i = 0; i < 60; ++i) {
            double t;
            if (std::isfinite(hi.value)) {
                t = cubic_step(lo.step, lo.value, lo.slope, hi.step, hi.value, hi.slope);
            } else {
                t = lo.step + 0.5 * (hi.step - lo.step);
            }
            Point cur = eval(t);
            if (cur.value > f0 + c1 * cur.step * slope0 || cur.value >= lo.value) {
                hi = cur;
            } else {
                if (std::abs(cur.slope) <= -c2 * slope0) {
                    return true;
                }
                if (cur.slope * (hi.step - lo.step) >= 0.0) {
                    hi = lo;
                }
                lo = cur;
            }
            if (std::abs(hi.step - lo.step) <= 1e-16 * std::max(1.0, std::abs(lo.step))) {
                break;
            }
        }
        // Accept the best sufficient-decrease point found, if any.
        if (lo.step > 0.0 && lo.value < f0) {
            eval(lo.step);
            return true;
        }
        return false;
    }
};

} // namespace detail

/// Minimizes f, where f(x, grad) returns the objective and writes the
/// gradient. Accepted iterates strictly decrease the objective.
template <typename F>
OptResult minimize(F&& f, std::vector<double> x0, const OptConfig& cfg)
{
    cfg.validate();
    const std::size_t n = x0.size();
    OptResult r;
    r.x = std::move(x0);
    std::vector<double> g(n, 0.0);
    r.value = f(std::span<const double>(r.x), std::span<double>(g));
    r.evaluations = 1;
    if (!std::isfinite(r.value)) {
        throw NumericalError("objective is not finite at the starting point");
    }
    r.history.push_back(r.value);

    std::deque<std::vector<double>> s_hist;
    std::deque<std::vector<double>> y_hist;
    std::deque<double> rho_hist;
    std::vector<double> dir(n);
    std::vector<double> alpha_buf;

    for (r.iterations = 0; r.iterations < cfg.max_iters; ++r.iterations) {
        r.grad_max_norm = detail::max_abs(g);
        if (r.grad_max_norm < cfg.tol) {
            r.converged = true;
            r.message = "gradient tolerance reached";
            return r;
        }

        // Two-loop recursion.
        for (std::size_t i = 0; i < n; ++i) {
            dir[i] = -g[i];
        }
        if (cfg.method == OptMethod::Lbfgs && !s_hist.empty()) {
            const std::size_t m = s_hist.size();
            alpha_buf.assign(m, 0.0);
            for (std::size_t k = m; k-- > 0;) {
                alpha_buf[k] = rho_hist[k] * detail::dot_span(s_hist[k], dir);
                for (std::size_t i = 0; i < n; ++i) {
                    dir[i] -= alpha_buf[k] * y_hist[k][i];
                }
            }
            const double gamma = detail::dot_span(s_hist.back(), y_hist.back())
                                 / detail::dot_span(y_hist.back(), y_hist.back());
            for (double& d : dir) {
                d *= gamma;
            }
            for (std::size_t k = 0; k < m; ++k) {
                const double beta = rho_hist[k] * detail::dot_span(y_hist[k], dir);
                for (std::size_t i = 0; i < n; ++i) {
                    dir[i] += s_hist[k][i] * (alpha_buf[k] - beta);
                }
            }
        }
        double slope = detail::dot_span(g, dir);
        if (!(slope < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < n; ++i) {
                dir[i] = -g[i];
            }
            slope = detail::dot_span(g, dir);
        }

        double step = 1.0;
        if (s_hist.empty()) {
            step = std::min(1.0, 1.0 / std::sqrt(detail::dot_span(g, g)));
        }
        detail::LineSearch<std::remove_reference_t<F>> ls{f, r.x, dir, {}, {}, 0, 0.0};
        const bool ok = ls.run(r.value, slope, step);
        r.evaluations += ls.evaluations;
        if (!ok) {
            r.message = "line search failed to find a decrease";
            return r;
        }
        const double new_value = ls.value;

        std::vector<double> s(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = ls.x[i] - r.x[i];
            y[i] = ls.g[i] - g[i];
        }
        const double sy = detail::dot_span(s, y);
        r.x = ls.x;
        g = ls.g;
        r.value = new_value;
        r.history.push_back(r.value);
        if (cfg.method == OptMethod::Lbfgs && sy > 1e-300) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > static_cast<std::size_t>(cfg.memory)) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
    }
    r.grad_max_norm = detail::max_abs(g);
    r.converged = r.grad_max_norm < cfg.tol;
    r.message = r.converged ? "gradient tolerance reached" : "iteration cap reached";
    return r;
}

} // namespace notifsurv
