#pragma once

// Two-parameter test family on [-1, 1]:
//
//   g(x) = gamma * (1 - (-x)^nu1)   for x in [-1, 0)
//   g(x) = gamma * (1 - x^nu2)      for x in [0, 1]
//
// with exact Fourier-Legendre coefficients of g and its distribution
// function f, exact squared norms and exact truncation errors. The
// coefficient machinery runs in rational arithmetic and only converts to
// double at the end; residuals near 1e-14 would otherwise be swamped by
// rounding in norm^2 - sum(c_i^2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "legproj/error.hpp"
#include "legproj/legendre.hpp"

namespace legproj {

using Rational = boost::multiprecision::cpp_rational;

/// Parameters (nu1, nu2) of the test family and derived constants.
class TestFamily
{
  public:
    TestFamily(int nu1, int nu2) : nu1_(nu1), nu2_(nu2)
    {
        if (nu1 < 1 || nu2 < 1)
            throw std::invalid_argument("TestFamily: nu1, nu2 must be positive integers");
        if (nu1 == nu2)
            throw std::invalid_argument("TestFamily: nu1 must differ from nu2");
        gamma_exact_ = 1 / (Rational(nu1, nu1 + 1) + Rational(nu2, nu2 + 1));
        gamma_ = gamma_exact_.convert_to<double>();
        f_at_zero_ = (gamma_exact_ * Rational(nu1, nu1 + 1)).convert_to<double>();
    }

    int nu1() const noexcept { return nu1_; }
    int nu2() const noexcept { return nu2_; }
    double gamma() const noexcept { return gamma_; }
    const Rational& gamma_exact() const noexcept { return gamma_exact_; }
    double f_at_zero() const noexcept { return f_at_zero_; }
    /// Supremum of the Sobolev-Slobodetskij index of g: min(nu1, nu2) + 1/2.
    double smoothness() const noexcept { return std::min(nu1_, nu2_) + 0.5; }
    /// Number of classical derivatives of g at 0: min(nu1, nu2) - 1.
    int regularity() const noexcept { return std::min(nu1_, nu2_) - 1; }

    friend bool operator==(const TestFamily& a, const TestFamily& b)
    {
        return a.nu1_ == b.nu1_ && a.nu2_ == b.nu2_;
    }

  private:
    int nu1_;
    int nu2_;
    Rational gamma_exact_;
    double gamma_;
    double f_at_zero_;
};

inline double density(const TestFamily& p, double x)
{
    if (x < -1.0 || x > 1.0)
        return 0.0;
    if (x < 0.0)
        return p.gamma() * (1.0 - std::pow(-x, p.nu1()));
    return p.gamma() * (1.0 - std::pow(x, p.nu2()));
}

inline double distribution(const TestFamily& p, double x)
{
    if (x < -1.0)
        return 0.0;
    if (x > 1.0)
        return 1.0;
    const double a = p.nu1();
    const double b = p.nu2();
    if (x < 0.0)
        return p.gamma() * (a / (a + 1.0) + x + std::pow(-x, a + 1.0) / (a + 1.0));
    return p.gamma() * (a / (a + 1.0) + x - std::pow(x, b + 1.0) / (b + 1.0));
}

/// Q-_{nu,i} = int_{-1}^0 x^nu P_i(x) dx and Q+_{nu,i} = int_0^1 x^nu P_i(x) dx,
/// filled by the nu = 0 closed forms and the recursion
///   Q_{nu,i} = ((i+1) Q_{nu-1,i+1} + i Q_{nu-1,i-1}) / (2i+1).
/// Row nu holds max_degree + max_nu - nu + 1 columns so every read stays in range.
template <class Scalar>
class QTable
{
  public:
    QTable(int max_nu, int max_degree) : max_nu_(max_nu), max_degree_(max_degree)
    {
        if (max_nu < 0 || max_degree < 0)
            throw std::invalid_argument("QTable: max_nu and max_degree must be >= 0");
        minus_.resize(static_cast<std::size_t>(max_nu) + 1);
        plus_.resize(static_cast<std::size_t>(max_nu) + 1);

        const int width0 = max_degree + max_nu + 1;
        auto& m0 = minus_[0];
        auto& p0 = plus_[0];
        m0.assign(static_cast<std::size_t>(width0), Scalar(0));
        p0.assign(static_cast<std::size_t>(width0), Scalar(0));
        m0[0] = Scalar(1);
        p0[0] = Scalar(1);
        if (width0 > 1) {
            m0[1] = Scalar(-1) / Scalar(2);
            p0[1] = Scalar(1) / Scalar(2);
        }
        for (int i = 3; i < width0; i += 2) {
            const Scalar ratio = Scalar(2 - i) / Scalar(i + 1);
            m0[i] = ratio * m0[i - 2];
            p0[i] = ratio * p0[i - 2];
        }

        for (int nu = 1; nu <= max_nu; ++nu) {
            const int width = width0 - nu;
            const auto& mp = minus_[nu - 1];
            const auto& pp = plus_[nu - 1];
            auto& m = minus_[nu];
            auto& p = plus_[nu];
            m.assign(static_cast<std::size_t>(width), Scalar(0));
            p.assign(static_cast<std::size_t>(width), Scalar(0));
            for (int i = 0; i < width; ++i) {
                const Scalar up = Scalar(i + 1);
                const Scalar down = Scalar(i);
                const Scalar denom = Scalar(2 * i + 1);
                const Scalar mlow = i > 0 ? mp[i - 1] : Scalar(0);
                const Scalar plow = i > 0 ? pp[i - 1] : Scalar(0);
                m[i] = (up * mp[i + 1] + down * mlow) / denom;
                p[i] = (up * pp[i + 1] + down * plow) / denom;
            }
        }
    }

    int max_nu() const noexcept { return max_nu_; }
    int max_degree() const noexcept { return max_degree_; }

    const Scalar& minus(int nu, int i) const { return minus_.at(nu).at(i); }
    const Scalar& plus(int nu, int i) const { return plus_.at(nu).at(i); }

  private:
    int max_nu_;
    int max_degree_;
    std::vector<std::vector<Scalar>> minus_;
    std::vector<std::vector<Scalar>> plus_;
};

inline QTable<double> build_q_table(int max_nu, int max_degree) { return {max_nu, max_degree}; }

inline QTable<Rational> build_q_table_exact(int max_nu, int max_degree) { return {max_nu, max_degree}; }

namespace detail {

inline Rational sign_power(int exponent) { return (exponent % 2 == 0) ? Rational(1) : Rational(-1); }

/// R_i with G_i = sqrt((2i+1)/2) * R_i, exact.
inline std::vector<Rational> density_brackets(const TestFamily& p, int n)
{
    const int a = p.nu1();
    const int b = p.nu2();
    const QTable<Rational> q(std::max(a, b), n);
    std::vector<Rational> r(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        r[i] = p.gamma_exact() *
               (q.minus(0, i) - sign_power(a) * q.minus(a, i) + q.plus(0, i) - q.plus(b, i));
    return r;
}

/// R_i with F_i = sqrt((2i+1)/2) * R_i, exact.
inline std::vector<Rational> distribution_brackets(const TestFamily& p, int n)
{
    const int a = p.nu1();
    const int b = p.nu2();
    const QTable<Rational> q(std::max(a, b) + 1, n);
    const Rational c = Rational(a, a + 1);
    std::vector<Rational> r(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i)
        r[i] = p.gamma_exact() *
               (c * q.minus(0, i) + q.minus(1, i) + sign_power(a + 1) / (a + 1) * q.minus(a + 1, i) +
                c * q.plus(0, i) + q.plus(1, i) - Rational(1, b + 1) * q.plus(b + 1, i));
    return r;
}

inline std::vector<double> to_coefficients(const std::vector<Rational>& brackets)
{
    std::vector<double> out(brackets.size());
    for (std::size_t i = 0; i < brackets.size(); ++i)
        out[i] = normalization(static_cast<int>(i)) * brackets[i].convert_to<double>();
    return out;
}

/// Squared L2 norm over [0, 1] of a polynomial given by rational coefficients.
inline Rational unit_interval_square_integral(const std::vector<Rational>& poly)
{
    Rational sum = 0;
    for (std::size_t j = 0; j < poly.size(); ++j)
        for (std::size_t k = 0; k < poly.size(); ++k)
            if (poly[j] != 0 && poly[k] != 0)
                sum += poly[j] * poly[k] / Rational(static_cast<long long>(j + k + 1));
    return sum;
}

}  // namespace detail

inline CoeffVector exact_density_coeffs(const TestFamily& p, int n)
{
    if (n < 0)
        throw std::invalid_argument("exact_density_coeffs: n must be >= 0");
    return {FunctionKind::density, detail::to_coefficients(detail::density_brackets(p, n))};
}

inline CoeffVector exact_distribution_coeffs(const TestFamily& p, int n)
{
    if (n < 0)
        throw std::invalid_argument("exact_distribution_coeffs: n must be >= 0");
    return {FunctionKind::distribution, detail::to_coefficients(detail::distribution_brackets(p, n))};
}

struct SquaredNorms
{
    Rational g;
    Rational f;
};

/// Exact int g^2 and int f^2 over [-1, 1]. On [-1, 0] the substitution
/// t = -x turns each branch into a polynomial on [0, 1].
inline SquaredNorms squared_norms_exact(const TestFamily& p)
{
    const int a = p.nu1();
    const int b = p.nu2();
    const Rational& gam = p.gamma_exact();

    // g, left: gamma (1 - t^a); right: gamma (1 - x^b)
    std::vector<Rational> gl(static_cast<std::size_t>(a) + 1, Rational(0));
    gl[0] = gam;
    gl[a] = -gam;
    std::vector<Rational> gr(static_cast<std::size_t>(b) + 1, Rational(0));
    gr[0] = gam;
    gr[b] = -gam;

    // f, left: gamma (c - t + t^{a+1}/(a+1)); right: gamma (c + x - x^{b+1}/(b+1))
    const Rational c = Rational(a, a + 1);
    std::vector<Rational> fl(static_cast<std::size_t>(a) + 2, Rational(0));
    fl[0] += gam * c;
    fl[1] += -gam;
    fl[a + 1] += gam / (a + 1);
    std::vector<Rational> fr(static_cast<std::size_t>(b) + 2, Rational(0));
    fr[0] += gam * c;
    fr[1] += gam;
    fr[b + 1] += -gam / (b + 1);

    using detail::unit_interval_square_integral;
    return {unit_interval_square_integral(gl) + unit_interval_square_integral(gr),
            unit_interval_square_integral(fl) + unit_interval_square_integral(fr)};
}

inline std::pair<double, double> squared_norms(const TestFamily& p)
{
    const auto exact = squared_norms_exact(p);
    return {exact.g.convert_to<double>(), exact.f.convert_to<double>()};
}

struct TruncationErrors
{
    double eps_g = 0.0;
    double eps_f = 0.0;
};

namespace detail {

/// sqrt of a residual radicand. Tiny negatives are rounding noise and clamp
/// to zero; anything below -1e-14 means the coefficients are wrong.
inline double checked_sqrt(double radicand, const char* what)
{
    if (radicand < -1e-14)
        throw numerical_error(std::string(what) + ": negative Parseval radicand " +
                              std::to_string(radicand));
    return radicand <= 0.0 ? 0.0 : std::sqrt(radicand);
}

/// norm^2 - sum_{i<=upto} (2i+1)/2 R_i^2 for every upto in 0..n, exact.
inline std::vector<Rational> residuals(const Rational& norm_sq, const std::vector<Rational>& brackets)
{
    std::vector<Rational> out(brackets.size());
    Rational acc = norm_sq;
    for (std::size_t i = 0; i < brackets.size(); ++i) {
        acc -= Rational(static_cast<long long>(2 * i + 1), 2) * brackets[i] * brackets[i];
        out[i] = acc;
    }
    return out;
}

}  // namespace detail

/// Exact truncation errors ||g - g<n>|| and ||f - f<n>|| for every n in 0..max_n.
inline std::vector<TruncationErrors> deterministic_error_curve(const TestFamily& p, int max_n)
{
    if (max_n < 0)
        throw std::invalid_argument("deterministic_errors: n must be >= 0");
    const auto norms = squared_norms_exact(p);
    const auto rg = detail::residuals(norms.g, detail::density_brackets(p, max_n));
    const auto rf = detail::residuals(norms.f, detail::distribution_brackets(p, max_n));
    std::vector<TruncationErrors> out(rg.size());
    for (std::size_t i = 0; i < rg.size(); ++i) {
        out[i].eps_g = detail::checked_sqrt(rg[i].convert_to<double>(), "deterministic_errors(g)");
        out[i].eps_f = detail::checked_sqrt(rf[i].convert_to<double>(), "deterministic_errors(f)");
    }
    return out;
}

inline TruncationErrors deterministic_errors(const TestFamily& p, int n)
{
    return deterministic_error_curve(p, n).back();
}

/// Exact coefficients and truncation errors up to a fixed degree, built once
/// and shared by every error evaluation against the same family.
struct ExactReference
{
    TestFamily family;
    CoeffVector g;                      // G_0..G_max
    CoeffVector f;                      // F_0..F_max
    std::vector<TruncationErrors> det;  // indexed by n

    ExactReference(const TestFamily& p, int max_n)
        : family(p),
          g(exact_density_coeffs(p, max_n)),
          f(exact_distribution_coeffs(p, max_n)),
          det(deterministic_error_curve(p, max_n))
    {
    }

    int max_degree() const noexcept { return g.degree(); }
};

/// Double integral of |eta(x) - eta(y)|^2 / |x - y|^{1 + 2 sigma} over
/// [-1, 1]^2 for the indicator eta of (0, inf):
///   2 (2^{-2 sigma} - 1) / (sigma (2 sigma - 1)),  0 < sigma < 1/2.
/// Returns nullopt when the integral diverges (sigma >= 1/2).
inline std::optional<double> indicator_slobodetskij_integral(double sigma)
{
    if (!(sigma > 0.0 && sigma < 1.0))
        throw std::invalid_argument("indicator_slobodetskij_integral: sigma must lie in (0, 1)");
    if (sigma >= 0.5)
        return std::nullopt;
    return 2.0 * (std::exp2(-2.0 * sigma) - 1.0) / (sigma * (2.0 * sigma - 1.0));
}

}  // namespace legproj
