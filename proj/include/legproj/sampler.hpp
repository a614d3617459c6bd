#pragma once

// Inverse-function sampling from the test family: xi = f^{-1}(alpha).
// The generic route solves the branch equation with a bracketed Newton
// iteration; families (1,2) and (3,2) also have closed forms (quadratic,
// Cardano cubic, Ferrari quartic).

#include <algorithm>
#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "legproj/error.hpp"
#include "legproj/rng.hpp"
#include "legproj/testfam.hpp"

namespace legproj {

/// Root of f(x) = alpha on (-1, 0) if alpha < f(0), else on [0, 1).
/// Newton steps that leave the bracket fall back to bisection.
inline double quantile_generic(const TestFamily& p, double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("quantile_generic: alpha must lie in (0, 1)");

    double lo = 0.0;
    double hi = 1.0;
    if (alpha < p.f_at_zero()) {
        lo = -1.0;
        hi = 0.0;
    }
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double h = distribution(p, x) - alpha;
        if (std::abs(h) <= 1e-13 || hi - lo <= 1e-14) {
            // One more Newton step when it stays inside; the residual test alone
            // leaves ~1e-13 / g(x) of slack in x where the density is small.
            const double d = density(p, x);
            if (d > 0.0) {
                const double refined = x - h / d;
                if (refined >= lo && refined <= hi &&
                    std::abs(distribution(p, refined) - alpha) <= std::abs(h))
                    return refined;
            }
            return x;
        }
        if (h < 0.0)
            lo = x;
        else
            hi = x;
        const double d = density(p, x);
        double next = d > 0.0 ? x - h / d : lo - 1.0;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        x = next;
    }
    throw numerical_error("quantile_generic: no convergence after 200 iterations for alpha=" +
                          std::to_string(alpha));
}

namespace detail {

/// Middle real root of x^3 - 3x + q = 0 with -q/2 = head, via the complex
/// Cardano radical A: xi = -Re A + sqrt(3) Im A.
inline double cardano_middle_root(double head, double disc)
{
    const std::complex<double> z = std::complex<double>(head, 0.0) + std::sqrt(std::complex<double>(disc, 0.0));
    const std::complex<double> a = std::pow(z, 1.0 / 3.0);
    assert(std::arg(a) >= std::numbers::pi / 6 - 1e-12 && std::arg(a) <= std::numbers::pi / 3 + 1e-12);
    return -a.real() + std::numbers::sqrt3 * a.imag();
}

}  // namespace detail

/// Closed-form quantile of g_{1,2} = (6/7)(1 + x | 1 - x^2).
inline double quantile_closed_12(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("quantile_closed_12: alpha must lie in (0, 1)");
    if (alpha < 3.0 / 7.0)
        return std::sqrt(7.0 * alpha / 3.0) - 1.0;
    const double t = 7.0 * alpha - 3.0;
    return detail::cardano_middle_root((3.0 - 7.0 * alpha) / 4.0, t * t / 16.0 - 1.0);
}

/// Closed-form quantile of g_{3,2} = (12/17)(1 + x^3 | 1 - x^2).
inline double quantile_closed_32(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("quantile_closed_32: alpha must lie in (0, 1)");
    const double t = 17.0 * alpha - 9.0;
    if (alpha < 9.0 / 17.0) {
        // Ferrari: x^4 + 4x + c = 0; 1 + t^3/729 >= 0 because |t| <= 9 here.
        const double omega = std::cbrt(1.0 + std::sqrt(std::max(0.0, 1.0 + t * t * t / 729.0)));
        const double y = omega - t / (9.0 * omega);
        return -std::sqrt(y / 2.0) + std::sqrt(std::max(0.0, -y / 2.0 + std::sqrt(2.0 / y)));
    }
    return detail::cardano_middle_root((9.0 - 17.0 * alpha) / 8.0, t * t / 64.0 - 1.0);
}

enum class SamplerKind {
    automatic,    ///< closed form when one exists, generic otherwise
    generic,
    closed_form,  ///< only valid for (1,2) and (3,2)
};

/// Quantile map alpha -> xi for one family, with the route fixed at construction.
class TestFamilySampler
{
  public:
    explicit TestFamilySampler(TestFamily family, SamplerKind kind = SamplerKind::automatic)
        : family_(std::move(family))
    {
        const bool is12 = family_.nu1() == 1 && family_.nu2() == 2;
        const bool is32 = family_.nu1() == 3 && family_.nu2() == 2;
        if (kind == SamplerKind::closed_form && !is12 && !is32)
            throw std::invalid_argument("TestFamilySampler: no closed form for (" +
                                        std::to_string(family_.nu1()) + "," +
                                        std::to_string(family_.nu2()) + ")");
        if (kind != SamplerKind::generic)
            route_ = is12 ? Route::closed12 : is32 ? Route::closed32 : Route::generic;
    }

    const TestFamily& family() const noexcept { return family_; }
    bool uses_closed_form() const noexcept { return route_ != Route::generic; }

    double operator()(double alpha) const
    {
        switch (route_) {
        case Route::closed12:
            return quantile_closed_12(alpha);
        case Route::closed32:
            return quantile_closed_32(alpha);
        default:
            return quantile_generic(family_, alpha);
        }
    }

  private:
    enum class Route { generic, closed12, closed32 };
    TestFamily family_;
    Route route_ = Route::generic;
};

/// Realizations xi_1..xi_N with their provenance.
struct SampleBatch
{
    std::vector<double> values;
    TestFamily family;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    std::uint64_t first_index = 0;

    std::size_t size() const noexcept { return values.size(); }
};

/// Writes quantiles of the stream's uniforms first_index.. into out.
template <class Quantile>
void fill_samples(const Quantile& quantile, const RngStream& rng, std::uint64_t first_index,
                  std::span<double> out)
{
    RngStream cursor = rng;
    cursor.seek(first_index);
    for (auto& v : out)
        v = quantile(cursor.next());
}

namespace detail {

template <class Quantile>
SampleBatch draw(const TestFamily& p, const Quantile& quantile, RngStream& rng, std::int64_t count)
{
    if (count < 1)
        throw std::invalid_argument("sample: N must be >= 1");
    SampleBatch batch{std::vector<double>(static_cast<std::size_t>(count)), p, rng.seed(),
                      rng.stream_id(), rng.position()};
    for (auto& v : batch.values)
        v = quantile(rng.next());
    return batch;
}

}  // namespace detail

inline SampleBatch sample_generic(const TestFamily& p, RngStream& rng, std::int64_t count)
{
    return detail::draw(p, [&p](double a) { return quantile_generic(p, a); }, rng, count);
}

inline SampleBatch sample_closed_12(RngStream& rng, std::int64_t count)
{
    return detail::draw(TestFamily(1, 2), quantile_closed_12, rng, count);
}

inline SampleBatch sample_closed_32(RngStream& rng, std::int64_t count)
{
    return detail::draw(TestFamily(3, 2), quantile_closed_32, rng, count);
}

inline SampleBatch sample(const TestFamilySampler& sampler, RngStream& rng, std::int64_t count)
{
    return detail::draw(sampler.family(), sampler, rng, count);
}

}  // namespace legproj
