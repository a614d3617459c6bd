#pragma once

// Randomized projection estimates of a density and its distribution function.
//
//   moment route:  M_k = mean(xi^k), G_i from the explicit Legendre sums
//   direct route:  G_i = mean(P^_i(xi)) with one recurrence sweep per sample
//
// Both produce G_0..G_{n+1} so that F_0..F_n follow from the antiderivative
// transform. Samples are consumed in fixed-size partitions of the counter
// space; each partition is Kahan-accumulated and partitions are combined by a
// fixed binary tree, so results do not depend on the number of threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "legproj/legendre.hpp"
#include "legproj/rng.hpp"
#include "legproj/sampler.hpp"
#include "legproj/summation.hpp"
#include "legproj/testfam.hpp"

namespace legproj {

enum class Algorithm { moments = 1, direct = 2 };

inline const char* to_string(Algorithm a) { return a == Algorithm::moments ? "moments" : "direct"; }

/// Sample moments M_0..M_kmax with M_0 = 1 exactly.
struct MomentVector
{
    std::vector<double> moments;

    int max_order() const noexcept { return static_cast<int>(moments.size()) - 1; }
    double operator[](std::size_t k) const { return moments[k]; }
};

struct ProjectionEstimate
{
    CoeffVector g;  // G_0..G_{n+1}
    CoeffVector f;  // F_0..F_n
    int n = 0;
    std::int64_t sample_size = 0;
    Algorithm algorithm = Algorithm::direct;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

struct AccumulationOptions
{
    /// 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
    /// Samples per partition. Part of the result's identity: changing it
    /// changes the summation tree.
    std::size_t partition_size = std::size_t{1} << 16;
};

namespace detail {

/// Fills `out` with samples [first, first + out.size()).
using SampleSource = std::function<void(std::uint64_t first, std::span<double> out)>;

enum class Kernel { powers, legendre };

constexpr std::size_t lane_width = 8;

/// Adds sum over xs of x^k (powers) or P_k(x) (legendre) into acc[k].
/// Samples advance in lanes of 8 through the recurrence; each lane's
/// plain sum is then added to the compensated accumulator.
inline void accumulate_partition(Kernel kernel, std::span<const double> xs, std::vector<KahanSum>& acc)
{
    const std::size_t width = acc.size();
    std::vector<double> a(width, 0.0);
    std::vector<double> b(width, 0.0);
    for (std::size_t k = 1; k + 1 < width; ++k) {
        a[k] = (2.0 * k + 1.0) / (k + 1.0);
        b[k] = static_cast<double>(k) / (k + 1.0);
    }

    std::size_t pos = 0;
    while (pos < xs.size()) {
        const std::size_t lanes = std::min(lane_width, xs.size() - pos);
        double x[lane_width] = {};
        double prev[lane_width] = {};
        double cur[lane_width] = {};
        for (std::size_t j = 0; j < lanes; ++j) {
            x[j] = xs[pos + j];
            prev[j] = 1.0;
            cur[j] = x[j];
        }
        acc[0].add(static_cast<double>(lanes));
        if (width > 1) {
            double s = 0.0;
            for (std::size_t j = 0; j < lane_width; ++j)
                s += cur[j];
            acc[1].add(s);
        }
        for (std::size_t k = 1; k + 1 < width; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < lane_width; ++j) {
                const double next = kernel == Kernel::legendre ? a[k] * x[j] * cur[j] - b[k] * prev[j]
                                                               : cur[j] * x[j];
                prev[j] = cur[j];
                cur[j] = next;
                s += next;
            }
            acc[k + 1].add(s);
        }
        pos += lanes;
    }
}

/// Per-index sums over N samples of either x^k or P_k(x), k = 0..width-1.
inline std::vector<double> accumulate(const SampleSource& source, std::int64_t count, std::size_t width,
                                      Kernel kernel, const AccumulationOptions& opts)
{
    if (count < 1)
        throw std::invalid_argument("estimator: sample size must be >= 1");
    const std::size_t part = std::max<std::size_t>(1, opts.partition_size);
    const auto total = static_cast<std::uint64_t>(count);
    const std::size_t parts = static_cast<std::size_t>((total + part - 1) / part);

    std::vector<std::vector<KahanSum>> partials(parts, std::vector<KahanSum>(width));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        std::vector<double> buffer(part);
        for (std::size_t p = next++; p < parts; p = next++) {
            const std::uint64_t first = static_cast<std::uint64_t>(p) * part;
            const std::size_t len = static_cast<std::size_t>(std::min<std::uint64_t>(part, total - first));
            std::span<double> xs(buffer.data(), len);
            source(first, xs);
            accumulate_partition(kernel, xs, partials[p]);
        }
    };

    unsigned threads = opts.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, parts));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    const auto reduced = tree_reduce(std::move(partials));
    std::vector<double> sums(width);
    for (std::size_t k = 0; k < width; ++k)
        sums[k] = reduced[k].value();
    return sums;
}

inline SampleSource batch_source(std::span<const double> values)
{
    return [values](std::uint64_t first, std::span<double> out) {
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(first), out.size(), out.begin());
    };
}

inline MomentVector moments_from_sums(const std::vector<double>& sums, std::int64_t count)
{
    MomentVector m;
    m.moments.resize(sums.size());
    m.moments[0] = 1.0;
    for (std::size_t k = 1; k < sums.size(); ++k)
        m.moments[k] = sums[k] / static_cast<double>(count);
    return m;
}

/// G_i = sqrt((2i+1)/2) * mean(P_i). Scaling after the mean keeps G_0 at
/// exactly 1/sqrt(2) since sum(P_0) = N is exact.
inline CoeffVector coeffs_from_legendre_sums(const std::vector<double>& sums, std::int64_t count)
{
    std::vector<double> g(sums.size());
    for (std::size_t i = 0; i < sums.size(); ++i)
        g[i] = normalization(static_cast<int>(i)) * (sums[i] / static_cast<double>(count));
    return {FunctionKind::density, std::move(g)};
}

}  // namespace detail

inline MomentVector estimate_moments(std::span<const double> samples, int kmax,
                                     const AccumulationOptions& opts = {})
{
    if (samples.empty())
        throw std::invalid_argument("estimate_moments: empty batch");
    if (kmax < 1)
        throw std::invalid_argument("estimate_moments: kmax must be >= 1");
    const auto count = static_cast<std::int64_t>(samples.size());
    const auto sums = detail::accumulate(detail::batch_source(samples), count,
                                         static_cast<std::size_t>(kmax) + 1, detail::Kernel::powers, opts);
    return detail::moments_from_sums(sums, count);
}

inline MomentVector estimate_moments(const SampleBatch& batch, int kmax, const AccumulationOptions& opts = {})
{
    return estimate_moments(std::span<const double>(batch.values), kmax, opts);
}

/// G_i = sqrt((2i+1)/2) sum_k a_{i,k} M_{i-2k}, i = 0..n, where a_{i,k} are
/// the explicit Legendre power coefficients. Loses accuracy with growing i
/// through cancellation; kept for comparison with the direct route.
inline CoeffVector coeffs_from_moments(const MomentVector& m, int n)
{
    if (n < 0)
        throw std::invalid_argument("coeffs_from_moments: n must be >= 0");
    if (m.max_order() < n)
        throw std::invalid_argument("coeffs_from_moments: need moments up to order " + std::to_string(n));
    std::vector<double> g(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        double s = 0.0;
        for (int k = 0; k <= i / 2; ++k)
            s += explicit_coefficient(i, k) * m.moments[static_cast<std::size_t>(i - 2 * k)];
        g[i] = normalization(i) * s;
    }
    return {FunctionKind::density, std::move(g)};
}

/// G_i = (1/N) sum_l P^_i(xi_l), i = 0..n.
inline CoeffVector coeffs_direct(std::span<const double> samples, int n, const AccumulationOptions& opts = {})
{
    if (samples.empty())
        throw std::invalid_argument("coeffs_direct: empty batch");
    if (n < 0)
        throw std::invalid_argument("coeffs_direct: n must be >= 0");
    const auto count = static_cast<std::int64_t>(samples.size());
    const auto sums = detail::accumulate(detail::batch_source(samples), count, static_cast<std::size_t>(n) + 1,
                                         detail::Kernel::legendre, opts);
    return detail::coeffs_from_legendre_sums(sums, count);
}

inline CoeffVector coeffs_direct(const SampleBatch& batch, int n, const AccumulationOptions& opts = {})
{
    return coeffs_direct(std::span<const double>(batch.values), n, opts);
}

namespace detail {

inline ProjectionEstimate finish_estimate(CoeffVector g, int n, std::int64_t count, Algorithm alg,
                                          std::uint64_t seed, std::uint64_t stream)
{
    ProjectionEstimate est;
    est.f = antiderivative_transform(g);
    est.g = std::move(g);
    est.n = n;
    est.sample_size = count;
    est.algorithm = alg;
    est.seed = seed;
    est.stream_id = stream;
    return est;
}

inline ProjectionEstimate estimate_from_source(const SampleSource& source, int n, std::int64_t count,
                                               Algorithm alg, std::uint64_t seed, std::uint64_t stream,
                                               const AccumulationOptions& opts)
{
    if (n < 0)
        throw std::invalid_argument("projection estimate: n must be >= 0");
    const auto width = static_cast<std::size_t>(n) + 2;
    if (alg == Algorithm::moments) {
        const auto sums = accumulate(source, count, width, Kernel::powers, opts);
        return finish_estimate(coeffs_from_moments(moments_from_sums(sums, count), n + 1), n, count, alg, seed,
                               stream);
    }
    const auto sums = accumulate(source, count, width, Kernel::legendre, opts);
    return finish_estimate(coeffs_from_legendre_sums(sums, count), n, count, alg, seed, stream);
}

}  // namespace detail

/// Joint estimate of g<n> and f<n> from N fresh samples xi = quantile(alpha),
/// alpha taken from rng at indices 0..N-1.
template <class Quantile>
ProjectionEstimate estimate_projection(const Quantile& quantile, int n, std::int64_t count, const RngStream& rng,
                                       Algorithm alg = Algorithm::direct, const AccumulationOptions& opts = {})
{
    const detail::SampleSource source = [&quantile, &rng](std::uint64_t first, std::span<double> out) {
        fill_samples(quantile, rng, first, out);
    };
    return detail::estimate_from_source(source, n, count, alg, rng.seed(), rng.stream_id(), opts);
}

/// Moment route: sample, M_1..M_{n+1}, G_0..G_{n+1} from moments, F from G.
template <class Quantile>
ProjectionEstimate run_algorithm_1(const Quantile& quantile, int n, std::int64_t count, const RngStream& rng,
                                   const AccumulationOptions& opts = {})
{
    return estimate_projection(quantile, n, count, rng, Algorithm::moments, opts);
}

/// Direct route: sample, G_0..G_{n+1} by recurrence, F from G.
template <class Quantile>
ProjectionEstimate run_algorithm_2(const Quantile& quantile, int n, std::int64_t count, const RngStream& rng,
                                   const AccumulationOptions& opts = {})
{
    return estimate_projection(quantile, n, count, rng, Algorithm::direct, opts);
}

/// Same estimate computed from an existing batch.
inline ProjectionEstimate estimate_from_batch(const SampleBatch& batch, int n, Algorithm alg,
                                              const AccumulationOptions& opts = {})
{
    if (batch.values.empty())
        throw std::invalid_argument("estimate_from_batch: empty batch");
    return detail::estimate_from_source(detail::batch_source(batch.values), n,
                                        static_cast<std::int64_t>(batch.values.size()), alg, batch.seed,
                                        batch.stream_id, opts);
}

enum class Target { g, f };

inline const char* to_string(Target t) { return t == Target::g ? "g" : "f"; }

/// L2 error of one estimated function split by Parseval into the truncation
/// part and the coefficient-estimation part.
struct ErrorReport
{
    int n = 0;
    std::int64_t sample_size = 0;
    Target target = Target::g;
    double eps_det = 0.0;
    double eps_stoch = 0.0;
    double eps_total = 0.0;
    std::uint64_t seed = 0;
};

struct EstimateErrors
{
    ErrorReport g;
    ErrorReport f;
};

/// eps_total = sqrt(||u||^2 - sum U_i^2 + sum (U_i - Ubar_i)^2), i = 0..n.
inline EstimateErrors estimate_error_vs_truth(const ProjectionEstimate& est, const ExactReference& ref)
{
    if (est.n > ref.max_degree())
        throw std::invalid_argument("estimate_error_vs_truth: reference only covers degree " +
                                    std::to_string(ref.max_degree()));
    auto report = [&](Target target, const CoeffVector& exact, const CoeffVector& estimate) {
        ErrorReport r;
        r.n = est.n;
        r.sample_size = est.sample_size;
        r.target = target;
        r.seed = est.seed;
        r.eps_det = target == Target::g ? ref.det[static_cast<std::size_t>(est.n)].eps_g
                                        : ref.det[static_cast<std::size_t>(est.n)].eps_f;
        KahanSum stoch;
        for (int i = 0; i <= est.n; ++i) {
            const double d = exact[static_cast<std::size_t>(i)] - estimate[static_cast<std::size_t>(i)];
            stoch.add(d * d);
        }
        r.eps_stoch = std::sqrt(stoch.value());
        r.eps_total = std::sqrt(r.eps_det * r.eps_det + stoch.value());
        return r;
    };
    return {report(Target::g, ref.g, est.g), report(Target::f, ref.f, est.f)};
}

inline EstimateErrors estimate_error_vs_truth(const ProjectionEstimate& est, const TestFamily& p)
{
    return estimate_error_vs_truth(est, ExactReference(p, est.n));
}

}  // namespace legproj
