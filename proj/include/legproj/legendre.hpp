#pragma once

// Legendre polynomials on [-1, 1]: standardized (P_i(1) = 1) and normalized
// (unit L2 norm) forms, explicit power-series coefficients, truncated series
// evaluation and the density -> distribution coefficient transform.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace legproj {

enum class EvalMode { recurrence, explicit_formula };

enum class FunctionKind { density, distribution };

/// Expansion coefficients c_0..c_n of a function in the normalized basis.
struct CoeffVector
{
    FunctionKind kind = FunctionKind::density;
    std::vector<double> coeffs;

    CoeffVector() = default;
    CoeffVector(FunctionKind k, std::vector<double> c) : kind(k), coeffs(std::move(c)) {}

    std::size_t size() const noexcept { return coeffs.size(); }
    /// Highest degree present; -1 for an empty vector.
    int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }
    double operator[](std::size_t i) const { return coeffs[i]; }

    /// Parseval partial sum over c_0..c_upto (clamped to the stored length).
    double squared_norm(int upto) const
    {
        double s = 0.0;
        const int last = std::min(upto, degree());
        for (int i = 0; i <= last; ++i)
            s += coeffs[static_cast<std::size_t>(i)] * coeffs[static_cast<std::size_t>(i)];
        return s;
    }
    double squared_norm() const { return squared_norm(degree()); }
};

/// sqrt((2i+1)/2): maps P_i onto the orthonormal polynomial.
inline double normalization(int i) { return std::sqrt((2.0 * i + 1.0) / 2.0); }

/// P_i(x) by the three-term recurrence (i+1) P_{i+1} = (2i+1) x P_i - i P_{i-1}.
/// Defined for all real x; callers outside [-1, 1] get the polynomial value.
inline double legendre_p(int i, double x)
{
    assert(i >= 0);
    if (i == 0)
        return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int k = 1; k < i; ++k) {
        const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Fills out[0..n] with P_0(x)..P_n(x) in one recurrence sweep.
/// Element i is bit-identical to legendre_p(i, x).
inline void legendre_p_all(int n, double x, std::span<double> out)
{
    assert(n >= 0 && out.size() >= static_cast<std::size_t>(n) + 1);
    out[0] = 1.0;
    if (n == 0)
        return;
    out[1] = x;
    for (int k = 1; k < n; ++k)
        out[k + 1] = ((2.0 * k + 1.0) * x * out[k] - k * out[k - 1]) / (k + 1.0);
}

/// Orthonormal polynomial sqrt((2i+1)/2) P_i(x).
inline double legendre_normalized(int i, double x) { return normalization(i) * legendre_p(i, x); }

inline void legendre_normalized_all(int n, double x, std::span<double> out)
{
    legendre_p_all(n, x, out);
    for (int i = 0; i <= n; ++i)
        out[i] *= normalization(i);
}

inline std::vector<double> legendre_normalized_all(int n, double x)
{
    if (n < 0)
        throw std::invalid_argument("legendre_normalized_all: negative degree");
    std::vector<double> out(static_cast<std::size_t>(n) + 1);
    legendre_normalized_all(n, x, out);
    return out;
}

/// Coefficient of x^{i-2k} in P_i:
///   2^{-i} (-1)^k (2i-2k)! / (k! (i-k)! (i-2k)!)
/// Small degrees use exact-in-double binomial products; above degree 30 the
/// factorial ratio goes through lgamma so nothing overflows.
inline double explicit_coefficient(int i, int k)
{
    if (i < 0 || k < 0 || k > i / 2)
        throw std::invalid_argument("explicit_coefficient: need 0 <= k <= floor(i/2), got i=" +
                                    std::to_string(i) + " k=" + std::to_string(k));
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    if (i > 30) {
        const double lg = std::lgamma(2.0 * i - 2.0 * k + 1.0) - std::lgamma(k + 1.0) -
                          std::lgamma(i - k + 1.0) - std::lgamma(i - 2.0 * k + 1.0) -
                          i * std::log(2.0);
        return sign * std::exp(lg);
    }
    // C(i, k) * C(2i-2k, i) / 2^i
    auto binomial = [](int top, int bottom) {
        double b = 1.0;
        for (int j = 1; j <= bottom; ++j)
            b = b * (top - bottom + j) / j;
        return b;
    };
    return sign * binomial(i, k) * binomial(2 * i - 2 * k, i) / std::ldexp(1.0, i);
}

/// P_i(x) from the explicit power sum; kept for cross-checking the recurrence.
inline double legendre_p_explicit(int i, double x)
{
    assert(i >= 0);
    // The alternating terms cancel heavily near |x| = 1; extended precision
    // keeps the sum within ~1e-12 of P_i for the degrees it is used at.
    long double sum = 0.0L;
    for (int k = 0; k <= i / 2; ++k)
        sum += static_cast<long double>(explicit_coefficient(i, k)) * std::pow(static_cast<long double>(x), i - 2 * k);
    return static_cast<double>(sum);
}

/// Evaluation context for degrees 0..max_degree with a reusable workspace.
class LegendreBasis
{
  public:
    explicit LegendreBasis(int max_degree, EvalMode mode = EvalMode::recurrence)
        : max_degree_(max_degree), mode_(mode)
    {
        if (max_degree < 0)
            throw std::invalid_argument("LegendreBasis: max_degree must be >= 0");
        work_.resize(static_cast<std::size_t>(max_degree) + 1);
    }

    int max_degree() const noexcept { return max_degree_; }
    EvalMode mode() const noexcept { return mode_; }

    double standardized(int i, double x) const
    {
        check(i);
        return mode_ == EvalMode::recurrence ? legendre_p(i, x) : legendre_p_explicit(i, x);
    }

    double normalized(int i, double x) const { return normalization(i) * standardized(i, x); }

    /// Orthonormal values for all degrees at x; the span aliases the workspace.
    std::span<const double> normalized_all(double x)
    {
        if (mode_ == EvalMode::recurrence) {
            legendre_normalized_all(max_degree_, x, work_);
        } else {
            for (int i = 0; i <= max_degree_; ++i)
                work_[i] = normalization(i) * legendre_p_explicit(i, x);
        }
        return work_;
    }

  private:
    void check(int i) const
    {
        if (i < 0 || i > max_degree_)
            throw std::out_of_range("LegendreBasis: degree " + std::to_string(i) + " outside [0, " +
                                    std::to_string(max_degree_) + "]");
    }

    int max_degree_;
    EvalMode mode_;
    std::vector<double> work_;
};

/// Truncated series sum c_i P^_i(x). Outside [-1, 1] the represented
/// function is taken from its support: a density is 0, a distribution is
/// 0 to the left and 1 to the right.
inline double eval_series(const CoeffVector& c, double x)
{
    if (x < -1.0 || x > 1.0) {
        if (c.kind == FunctionKind::density)
            return 0.0;
        return x < -1.0 ? 0.0 : 1.0;
    }
    if (c.size() == 0)
        return 0.0;
    const auto values = legendre_normalized_all(c.degree(), x);
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
        sum += c.coeffs[i] * values[i];
    return sum;
}

/// Density coefficients G_0..G_{n+1} -> distribution coefficients F_0..F_n:
///   F_0 = G_0 - G_1/sqrt(3)
///   F_i = G_{i-1}/sqrt((2i-1)(2i+1)) - G_{i+1}/sqrt((2i+1)(2i+3))
inline CoeffVector antiderivative_transform(const CoeffVector& g)
{
    if (g.kind != FunctionKind::density)
        throw std::invalid_argument("antiderivative_transform: input must be density coefficients");
    if (g.size() < 2)
        throw std::invalid_argument(
            "antiderivative_transform: need at least n+2 >= 2 density coefficients, got " +
            std::to_string(g.size()));
    const std::size_t len = g.size() - 1;
    std::vector<double> f(len);
    f[0] = g.coeffs[0] - g.coeffs[1] / std::sqrt(3.0);
    for (std::size_t i = 1; i < len; ++i) {
        const double di = static_cast<double>(i);
        f[i] = g.coeffs[i - 1] / std::sqrt((2.0 * di - 1.0) * (2.0 * di + 1.0)) -
               g.coeffs[i + 1] / std::sqrt((2.0 * di + 1.0) * (2.0 * di + 3.0));
    }
    return {FunctionKind::distribution, std::move(f)};
}

}  // namespace legproj
