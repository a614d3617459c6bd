#pragma once

// Mean-square error bounds for projection estimates, the conditional
// optimization of (n, N) for a target accuracy, least-squares fitting of the
// bound constants and empirical convergence rates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "legproj/error.hpp"
#include "legproj/estimator.hpp"

namespace legproj {

enum class BoundFlavor {
    power_law,    ///< deterministic term c2 / n^{2s}
    gamma_ratio,  ///< deterministic term c2 Gamma(n-s+2) / Gamma(n+s+2)
};

/// Constants of B^2 <= c1 n / N + c2 * (deterministic decay in n).
struct BoundConstants
{
    double c1 = 0.0;
    double c2 = 0.0;
    double s = 0.0;
    BoundFlavor flavor = BoundFlavor::power_law;
};

inline void validate(const BoundConstants& c)
{
    if (!(c.c1 > 0.0) || !(c.c2 > 0.0) || !std::isfinite(c.c1) || !std::isfinite(c.c2))
        throw std::invalid_argument("BoundConstants: c1 and c2 must be positive and finite");
    if (!(c.s > 0.0))
        throw std::invalid_argument("BoundConstants: smoothness s must be positive");
}

/// Gamma(n - s + 2) / Gamma(n + s + 2) through lgamma; n - s + 2 must be > 0.
inline double gamma_ratio(double n, double s)
{
    if (!(n - s + 2.0 > 0.0))
        throw std::invalid_argument("gamma_ratio: requires n - s + 2 > 0");
    return std::exp(std::lgamma(n - s + 2.0) - std::lgamma(n + s + 2.0));
}

/// Deterministic part of the squared bound. The distribution function is one
/// order smoother, so its decay uses s + 1.
inline double deterministic_term(const BoundConstants& c, double n, Target target)
{
    const double s = target == Target::g ? c.s : c.s + 1.0;
    if (c.flavor == BoundFlavor::gamma_ratio)
        return c.c2 * gamma_ratio(n, s);
    return c.c2 / std::pow(n, 2.0 * s);
}

inline double stochastic_term(const BoundConstants& c, double n, double sample_size)
{
    return c.c1 * n / sample_size;
}

/// sqrt(c1 n / N + deterministic term).
inline double error_bound(const BoundConstants& c, std::int64_t n, std::int64_t sample_size,
                          Target target = Target::g)
{
    if (n < 1 || sample_size < 1)
        throw std::invalid_argument("error_bound: n and N must be >= 1");
    const auto dn = static_cast<double>(n);
    return std::sqrt(stochastic_term(c, dn, static_cast<double>(sample_size)) + deterministic_term(c, dn, target));
}

/// n * Gamma(n+s+2) / Gamma(n-s+2): the sample-size growth that balances the
/// gamma-ratio bound, exposed as a curve over n.
inline double gamma_ratio_relation(double n, double s) { return n / gamma_ratio(n, s); }

struct OptimizationPlan
{
    double gamma = 0.0;
    std::int64_t n_opt = 0;
    std::int64_t sample_size_opt = 0;
    /// N_opt grows like n_opt^relation_exponent (2s+1 for g, 2s+3 for f).
    double relation_exponent = 0.0;
    /// Real-valued balance point before rounding up.
    double n_continuous = 0.0;
    double sample_size_continuous = 0.0;
    Target target = Target::g;
};

/// Balances the two terms of the power-law bound at gamma^2 / 2 each and
/// rounds both parameters up, so error_bound(plan) <= gamma.
inline OptimizationPlan optimize(const BoundConstants& c, double gamma, Target target = Target::g)
{
    validate(c);
    if (!(gamma > 0.0))
        throw std::invalid_argument("optimize: gamma must be positive");
    if (c.flavor != BoundFlavor::power_law)
        throw std::invalid_argument("optimize: only the power-law bound has a closed-form plan");

    const double decay = target == Target::g ? 2.0 * c.s : 2.0 * c.s + 2.0;
    const double half = gamma * gamma / 2.0;

    OptimizationPlan plan;
    plan.gamma = gamma;
    plan.target = target;
    plan.relation_exponent = decay + 1.0;
    plan.n_continuous = std::pow(c.c2 / half, 1.0 / decay);
    plan.n_opt = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(plan.n_continuous)));
    // Guard against the ceil landing one short through rounding in pow.
    while (deterministic_term(c, static_cast<double>(plan.n_opt), target) > half)
        ++plan.n_opt;
    plan.sample_size_continuous = c.c1 * plan.n_continuous / half;
    plan.sample_size_opt = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(c.c1 * static_cast<double>(plan.n_opt) / half)));
    while (stochastic_term(c, static_cast<double>(plan.n_opt), static_cast<double>(plan.sample_size_opt)) > half)
        ++plan.sample_size_opt;
    return plan;
}

/// One observed error at (n, N).
struct GridPoint
{
    double n = 0.0;
    double sample_size = 0.0;
    double eps = 0.0;
};

namespace detail {

struct FitResiduals
{
    double sse = 0.0;
    bool valid = false;
};

inline FitResiduals fit_sse(std::span<const GridPoint> grid, double s, double c1, double c2)
{
    FitResiduals r;
    for (const auto& p : grid) {
        const double model = std::sqrt(c1 * p.n / p.sample_size + c2 / std::pow(p.n, 2.0 * s));
        const double d = model - p.eps;
        r.sse += d * d;
    }
    r.valid = std::isfinite(r.sse);
    return r;
}

/// min ||A c - y||^2 over c >= 0 for a two-column A given by its normal
/// equations (a11 a12; a12 a22) c = (b1, b2).
inline std::pair<double, double> nonneg_2x2(double a11, double a12, double a22, double b1, double b2)
{
    const double det = a11 * a22 - a12 * a12;
    if (det > 0.0) {
        const double x1 = (a22 * b1 - a12 * b2) / det;
        const double x2 = (a11 * b2 - a12 * b1) / det;
        if (x1 >= 0.0 && x2 >= 0.0)
            return {x1, x2};
    }
    // Best solution on either axis.
    const double only1 = a11 > 0.0 ? std::max(0.0, b1 / a11) : 0.0;
    const double only2 = a22 > 0.0 ? std::max(0.0, b2 / a22) : 0.0;
    // ||A c - y||^2 - ||y||^2 = c^T M c - 2 b^T c
    const double f1 = a11 * only1 * only1 - 2.0 * b1 * only1;
    const double f2 = a22 * only2 * only2 - 2.0 * b2 * only2;
    return f1 <= f2 ? std::pair{only1, 0.0} : std::pair{0.0, only2};
}

}  // namespace detail

/// Least-squares fit of c1, c2 >= 0 in eps ~ sqrt(c1 n / N + c2 / n^{2s}).
/// The squared model is linear in (c1, c2); that fit seeds a projected
/// Gauss-Newton iteration on the unsquared residuals.
inline BoundConstants fit_constants(std::span<const GridPoint> grid, double s)
{
    std::set<double> ns;
    std::set<double> sizes;
    for (const auto& p : grid) {
        if (!(p.n >= 1.0) || !(p.sample_size >= 1.0) || !(p.eps >= 0.0) || !std::isfinite(p.eps))
            throw std::invalid_argument("fit_constants: grid points need n >= 1, N >= 1, finite eps >= 0");
        ns.insert(p.n);
        sizes.insert(p.sample_size);
    }
    if (ns.size() < 2 || sizes.size() < 2)
        throw std::invalid_argument("fit_constants: grid needs at least two distinct n and two distinct N");
    if (!(s > 0.0))
        throw std::invalid_argument("fit_constants: s must be positive");

    // Columns are rescaled to unit norm so the 2x2 systems stay well conditioned.
    double scale1 = 0.0;
    double scale2 = 0.0;
    for (const auto& p : grid) {
        const double x1 = p.n / p.sample_size;
        const double x2 = std::pow(p.n, -2.0 * s);
        scale1 += x1 * x1;
        scale2 += x2 * x2;
    }
    scale1 = std::sqrt(scale1);
    scale2 = std::sqrt(scale2);

    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    for (const auto& p : grid) {
        const double x1 = p.n / p.sample_size / scale1;
        const double x2 = std::pow(p.n, -2.0 * s) / scale2;
        const double y = p.eps * p.eps;
        a11 += x1 * x1;
        a12 += x1 * x2;
        a22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    auto [u1, u2] = detail::nonneg_2x2(a11, a12, a22, b1, b2);
    double c1 = u1 / scale1;
    double c2 = u2 / scale2;
    if (c1 <= 0.0 && c2 <= 0.0)
        throw numerical_error("fit_constants: squared-error fit collapsed to zero");

    double sse = detail::fit_sse(grid, s, c1, c2).sse;
    for (int iter = 0; iter < 200; ++iter) {
        double j11 = 0, j12 = 0, j22 = 0, g1 = 0, g2 = 0;
        for (const auto& p : grid) {
            const double x1 = p.n / p.sample_size / scale1;
            const double x2 = std::pow(p.n, -2.0 * s) / scale2;
            const double model = std::sqrt(c1 * scale1 * x1 + c2 * scale2 * x2);
            if (model <= 0.0)
                continue;
            const double d1 = x1 / (2.0 * model);
            const double d2 = x2 / (2.0 * model);
            const double r = p.eps - model;
            j11 += d1 * d1;
            j12 += d1 * d2;
            j22 += d2 * d2;
            g1 += d1 * r;
            g2 += d2 * r;
        }
        const double det = j11 * j22 - j12 * j12;
        if (!(det > 0.0))
            break;
        const double step1 = (j22 * g1 - j12 * g2) / det / scale1;
        const double step2 = (j11 * g2 - j12 * g1) / det / scale2;

        double t = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            const double n1 = std::max(0.0, c1 + t * step1);
            const double n2 = std::max(0.0, c2 + t * step2);
            const auto trial = detail::fit_sse(grid, s, n1, n2);
            if (trial.valid && trial.sse <= sse) {
                const double rel = std::abs(n1 - c1) / std::max(c1, 1e-300) + std::abs(n2 - c2) / std::max(c2, 1e-300);
                c1 = n1;
                c2 = n2;
                improved = sse - trial.sse > 0.0 || rel > 0.0;
                sse = trial.sse;
                if (rel < 1e-13)
                    improved = false;
                break;
            }
        }
        if (!improved)
            break;
    }
    return {c1, c2, s, BoundFlavor::power_law};
}

/// Slope of log(eps) against log(n), negated: eps ~ C n^{-rate}.
inline double empirical_rate(std::span<const std::pair<double, double>> points)
{
    if (points.size() < 3)
        throw std::invalid_argument("empirical_rate: need at least 3 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].second > 0.0))
            throw std::invalid_argument("empirical_rate: eps must be positive");
        if (!(points[i].first > 0.0) || (i > 0 && !(points[i].first > points[i - 1].first)))
            throw std::invalid_argument("empirical_rate: n must be positive and strictly increasing");
    }
    double mx = 0.0;
    double my = 0.0;
    for (const auto& [n, eps] : points) {
        mx += std::log(n);
        my += std::log(eps);
    }
    mx /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& [n, eps] : points) {
        const double dx = std::log(n) - mx;
        sxy += dx * (std::log(eps) - my);
        sxx += dx * dx;
    }
    return -sxy / sxx;
}

/// Least-squares slope of log(y) on log(x); shared by the scaling checks.
inline double log_log_slope(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("log_log_slope: need two equally sized series of length >= 2");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

}  // namespace legproj
