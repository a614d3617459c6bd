#pragma once

// Experiment harness: grids of (n, m) cells with N = 2^{m+9}, per-cell
// derived seeds, constant fitting over a grid and the CSV / JSON writers used
// by the command-line tool.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "legproj/analysis.hpp"
#include "legproj/error.hpp"
#include "legproj/estimator.hpp"
#include "legproj/rng.hpp"
#include "legproj/sampler.hpp"
#include "legproj/testfam.hpp"

namespace legproj {

enum class OutputFormat { csv, json };

struct ExperimentConfig
{
    int nu1 = 1;
    int nu2 = 2;
    std::vector<int> n_list{4, 8, 16, 32, 64};
    std::vector<int> m_list{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14};
    std::uint64_t seed = 1;
    int replicates = 1;
    Algorithm algorithm = Algorithm::direct;
    OutputFormat format = OutputFormat::csv;
    /// Requests above this m trigger a warning (N = 2^27 at m = 18).
    int max_m = 18;
    /// Worker threads for grid cells; 0 means hardware concurrency.
    unsigned threads = 0;

    TestFamily family() const { return {nu1, nu2}; }
};

/// N = 2^{m+9}.
inline std::int64_t sample_size_for(int m)
{
    if (m < 0 || m > 53)
        throw std::invalid_argument("sample_size_for: m must lie in [0, 53]");
    return std::int64_t{1} << (m + 9);
}

/// Checks a grid configuration; returns warnings that do not stop the run.
inline std::vector<std::string> validate_grid(const ExperimentConfig& c)
{
    (void)c.family();
    if (c.n_list.empty() || c.m_list.empty())
        throw std::invalid_argument("grid needs at least one n and one m");
    for (int n : c.n_list)
        if (n < 1)
            throw std::invalid_argument("n must be >= 1, got " + std::to_string(n));
    for (int m : c.m_list)
        (void)sample_size_for(m);
    if (c.replicates < 1)
        throw std::invalid_argument("replicates must be >= 1");
    std::vector<std::string> warnings;
    for (int m : c.m_list)
        if (m > c.max_m)
            warnings.push_back("m=" + std::to_string(m) + " exceeds " + std::to_string(c.max_m) +
                               " (N=" + std::to_string(sample_size_for(m)) + "); expect long runtimes");
    return warnings;
}

/// Seed of one grid cell; any cell can be rerun on its own.
inline std::uint64_t cell_seed(std::uint64_t seed, int nu1, int nu2, int n, int m, int replicate)
{
    std::uint64_t h = mix64(seed);
    for (const std::int64_t v : {std::int64_t{nu1}, std::int64_t{nu2}, std::int64_t{n}, std::int64_t{m},
                                 std::int64_t{replicate}})
        h = mix64(h ^ static_cast<std::uint64_t>(v));
    return h;
}

struct TableRow
{
    int nu1 = 0;
    int nu2 = 0;
    int n = 0;
    int m = 0;
    std::int64_t sample_size = 0;
    Target target = Target::g;
    double eps_det = 0.0;
    double eps_stoch = 0.0;
    double eps_total = 0.0;
    std::uint64_t seed = 0;
    int replicate = 0;
};

struct ExactRow
{
    int n = 0;
    double eps_g = 0.0;
    double eps_f = 0.0;
};

inline std::vector<ExactRow> run_exact(const ExperimentConfig& c)
{
    const TestFamily p = c.family();
    if (c.n_list.empty())
        throw std::invalid_argument("exact: n list is empty");
    const int max_n = *std::max_element(c.n_list.begin(), c.n_list.end());
    if (*std::min_element(c.n_list.begin(), c.n_list.end()) < 0)
        throw std::invalid_argument("exact: n must be >= 0");
    const auto curve = deterministic_error_curve(p, max_n);
    std::vector<ExactRow> rows;
    for (int n : c.n_list)
        rows.push_back({n, curve[static_cast<std::size_t>(n)].eps_g, curve[static_cast<std::size_t>(n)].eps_f});
    return rows;
}

namespace detail {

/// Runs job(i) for i in [0, count) on a small pool; results are written by
/// index, so ordering never depends on scheduling.
template <class Job>
void for_each_index(std::size_t count, unsigned threads, Job job)
{
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = next++; i < count; i = next++)
                        job(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                    next = count;
                }
            });
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

}  // namespace detail

/// One estimate per (n, m, replicate); rows in (n, m, replicate) order with g
/// before f.
inline std::vector<TableRow> run_table(const ExperimentConfig& c, const ExactReference* shared_ref = nullptr)
{
    (void)validate_grid(c);
    const TestFamily p = c.family();
    const int max_n = *std::max_element(c.n_list.begin(), c.n_list.end());
    std::optional<ExactReference> own;
    if (shared_ref == nullptr || !(shared_ref->family == p) || shared_ref->max_degree() < max_n) {
        own.emplace(p, max_n);
        shared_ref = &*own;
    }
    const TestFamilySampler sampler(p);

    struct Cell
    {
        int n, m, replicate;
    };
    std::vector<Cell> cells;
    for (int n : c.n_list)
        for (int m : c.m_list)
            for (int r = 0; r < c.replicates; ++r)
                cells.push_back({n, m, r});

    std::vector<TableRow> rows(2 * cells.size());
    // Cells run concurrently, each accumulating on one thread.
    AccumulationOptions opts;
    opts.threads = 1;
    detail::for_each_index(cells.size(), c.threads, [&](std::size_t k) {
        const Cell& cell = cells[k];
        const std::uint64_t seed = cell_seed(c.seed, c.nu1, c.nu2, cell.n, cell.m, cell.replicate);
        const std::int64_t size = sample_size_for(cell.m);
        const auto est = estimate_projection(sampler, cell.n, size, RngStream(seed), c.algorithm, opts);
        const auto err = estimate_error_vs_truth(est, *shared_ref);
        for (const auto* r : {&err.g, &err.f}) {
            TableRow row{c.nu1, c.nu2, cell.n, cell.m, size, r->target, r->eps_det, r->eps_stoch, r->eps_total,
                         seed, cell.replicate};
            rows[2 * k + (r->target == Target::g ? 0 : 1)] = row;
        }
    });
    return rows;
}

/// Root-mean-square of eps_total (and eps_stoch) over replicates, one row per
/// (n, m, target); replicate is set to -1 and seed to the first replicate's.
inline std::vector<TableRow> average_replicates(const std::vector<TableRow>& rows)
{
    struct Acc
    {
        TableRow first;
        double stoch2 = 0.0;
        double total2 = 0.0;
        int count = 0;
    };
    std::map<std::tuple<int, int, int>, Acc> groups;
    std::vector<std::tuple<int, int, int>> order;
    for (const auto& r : rows) {
        const auto key = std::make_tuple(r.n, r.m, static_cast<int>(r.target));
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) {
            it->second.first = r;
            order.push_back(key);
        }
        it->second.stoch2 += r.eps_stoch * r.eps_stoch;
        it->second.total2 += r.eps_total * r.eps_total;
        ++it->second.count;
    }
    std::vector<TableRow> out;
    for (const auto& key : order) {
        const auto& a = groups.at(key);
        TableRow r = a.first;
        r.eps_stoch = std::sqrt(a.stoch2 / a.count);
        r.eps_total = std::sqrt(a.total2 / a.count);
        r.replicate = -1;
        out.push_back(r);
    }
    return out;
}

/// Smallest m at which the replicate-mean squared stochastic error drops to
/// the squared truncation error for this n, or nullopt if it never does.
/// Tracks where the bound terms balance, i.e. where N_opt sits for this n.
inline std::optional<int> balance_index(const std::vector<TableRow>& rows, int n, Target target)
{
    std::map<int, std::pair<double, int>> by_m;
    double det = -1.0;
    for (const auto& r : rows) {
        if (r.n != n || r.target != target)
            continue;
        auto& [sum, count] = by_m[r.m];
        sum += r.eps_stoch * r.eps_stoch;
        ++count;
        det = r.eps_det;
    }
    for (const auto& [m, acc] : by_m)
        if (acc.first / acc.second <= det * det)
            return m;
    return std::nullopt;
}

struct SurfacePoint
{
    int k = 0;  // n = 2^{k+2} on the standard grid; log2(n) - 2 in general
    int m = 0;
    int n = 0;
    std::int64_t sample_size = 0;
    double computational = 0.0;
    double theoretical = 0.0;
};

struct FitResult
{
    BoundConstants constants;
    std::vector<SurfacePoint> surface;
};

/// Fits the density bound over the g rows of a grid with s = min(nu1, nu2) + 1/2.
inline FitResult fit_grid(const std::vector<TableRow>& rows, double s)
{
    std::vector<TableRow> g_rows;
    for (const auto& r : average_replicates(rows))
        if (r.target == Target::g)
            g_rows.push_back(r);
    std::vector<GridPoint> grid;
    for (const auto& r : g_rows)
        grid.push_back({static_cast<double>(r.n), static_cast<double>(r.sample_size), r.eps_total});
    FitResult out;
    out.constants = fit_constants(grid, s);
    for (const auto& r : g_rows)
        out.surface.push_back({static_cast<int>(std::lround(std::log2(r.n))) - 2, r.m, r.n, r.sample_size,
                               r.eps_total, error_bound(out.constants, r.n, r.sample_size, Target::g)});
    return out;
}

inline FitResult run_fit(const ExperimentConfig& c) { return fit_grid(run_table(c), c.family().smoothness()); }

/// Coefficient estimates of one (n, m) cell next to the exact ones.
struct CoefficientRow
{
    int n = 0;
    int m = 0;
    std::int64_t sample_size = 0;
    int i = 0;
    double g_estimate = 0.0;
    double g_exact = 0.0;
    double f_estimate = 0.0;
    double f_exact = 0.0;
    std::uint64_t seed = 0;
    int replicate = 0;
};

inline std::vector<CoefficientRow> run_estimate(const ExperimentConfig& c)
{
    (void)validate_grid(c);
    const TestFamily p = c.family();
    const int max_n = *std::max_element(c.n_list.begin(), c.n_list.end());
    const ExactReference ref(p, max_n + 1);
    const TestFamilySampler sampler(p);
    std::vector<CoefficientRow> rows;
    for (int n : c.n_list)
        for (int m : c.m_list)
            for (int r = 0; r < c.replicates; ++r) {
                const std::uint64_t seed = cell_seed(c.seed, c.nu1, c.nu2, n, m, r);
                const auto size = sample_size_for(m);
                const auto est = estimate_projection(sampler, n, size, RngStream(seed), c.algorithm);
                for (int i = 0; i <= n; ++i)
                    rows.push_back({n, m, size, i, est.g[static_cast<std::size_t>(i)],
                                    ref.g[static_cast<std::size_t>(i)], est.f[static_cast<std::size_t>(i)],
                                    ref.f[static_cast<std::size_t>(i)], seed, r});
            }
    return rows;
}

// ---------------------------------------------------------------- formatting

/// Shortest decimal that round-trips to the same double.
inline std::string format_shortest(double x)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (res.ec != std::errc{})
        throw std::runtime_error("format_shortest: to_chars failed");
    return {buf.data(), res.ptr};
}

/// Table display: 6 decimals, or 3 significant digits in scientific notation
/// below 1e-5 (0.000527, 6.48e-6).
inline std::string format_display(double x)
{
    std::array<char, 48> buf{};
    if (x == 0.0 || std::abs(x) >= 1e-5) {
        std::snprintf(buf.data(), buf.size(), "%.6f", x);
        return buf.data();
    }
    std::snprintf(buf.data(), buf.size(), "%.2e", x);
    // Drop the exponent's sign padding: 6.48e-06 -> 6.48e-6.
    std::string s = buf.data();
    const auto e = s.find('e');
    std::string mant = s.substr(0, e);
    std::string exp = s.substr(e + 1);
    const char sign = exp[0] == '-' ? '-' : '\0';
    std::size_t digits = exp.find_first_not_of("+-0");
    exp = digits == std::string::npos ? "0" : exp.substr(digits);
    return mant + "e" + (sign ? std::string(1, sign) : std::string()) + exp;
}

inline void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows)
{
    os << "nu1,nu2,n,m,N,target,eps_det,eps_stoch,eps_total,seed,replicate\n";
    for (const auto& r : rows)
        os << r.nu1 << ',' << r.nu2 << ',' << r.n << ',' << r.m << ',' << r.sample_size << ',' << to_string(r.target)
           << ',' << format_shortest(r.eps_det) << ',' << format_shortest(r.eps_stoch) << ','
           << format_shortest(r.eps_total) << ',' << r.seed << ',' << r.replicate << '\n';
}

inline nlohmann::json table_json(const std::vector<TableRow>& rows)
{
    auto arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"nu1", r.nu1},
                       {"nu2", r.nu2},
                       {"n", r.n},
                       {"m", r.m},
                       {"N", r.sample_size},
                       {"target", to_string(r.target)},
                       {"eps_det", r.eps_det},
                       {"eps_stoch", r.eps_stoch},
                       {"eps_total", r.eps_total},
                       {"seed", r.seed},
                       {"replicate", r.replicate}});
    return arr;
}

inline void write_exact_csv(std::ostream& os, int nu1, int nu2, const std::vector<ExactRow>& rows)
{
    os << "nu1,nu2,n,target,eps_det,display\n";
    for (const Target t : {Target::g, Target::f})
        for (const auto& r : rows) {
            const double v = t == Target::g ? r.eps_g : r.eps_f;
            os << nu1 << ',' << nu2 << ',' << r.n << ',' << to_string(t) << ',' << format_shortest(v) << ','
               << format_display(v) << '\n';
        }
}

inline nlohmann::json exact_json(int nu1, int nu2, const std::vector<ExactRow>& rows)
{
    auto arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"nu1", nu1},
                       {"nu2", nu2},
                       {"n", r.n},
                       {"eps_g", r.eps_g},
                       {"eps_f", r.eps_f},
                       {"display_g", format_display(r.eps_g)},
                       {"display_f", format_display(r.eps_f)}});
    return arr;
}

inline void write_surface_csv(std::ostream& os, const FitResult& fit)
{
    os << "# c1=" << format_shortest(fit.constants.c1) << " c2=" << format_shortest(fit.constants.c2)
       << " s=" << format_shortest(fit.constants.s) << '\n';
    os << "k,m,n,N,computational,theoretical\n";
    for (const auto& p : fit.surface)
        os << p.k << ',' << p.m << ',' << p.n << ',' << p.sample_size << ',' << format_shortest(p.computational) << ','
           << format_shortest(p.theoretical) << '\n';
}

inline nlohmann::json fit_json(const FitResult& fit)
{
    auto surface = nlohmann::json::array();
    for (const auto& p : fit.surface)
        surface.push_back({{"k", p.k},
                           {"m", p.m},
                           {"n", p.n},
                           {"N", p.sample_size},
                           {"computational", p.computational},
                           {"theoretical", p.theoretical}});
    return {{"c1", fit.constants.c1}, {"c2", fit.constants.c2}, {"s", fit.constants.s}, {"surface", surface}};
}

inline void write_plans_csv(std::ostream& os, const std::vector<OptimizationPlan>& plans)
{
    os << "gamma,target,n_opt,N_opt,relation_exponent,n_continuous,N_continuous\n";
    for (const auto& p : plans)
        os << format_shortest(p.gamma) << ',' << to_string(p.target) << ',' << p.n_opt << ',' << p.sample_size_opt
           << ',' << format_shortest(p.relation_exponent) << ',' << format_shortest(p.n_continuous) << ','
           << format_shortest(p.sample_size_continuous) << '\n';
}

inline nlohmann::json plans_json(const std::vector<OptimizationPlan>& plans)
{
    auto arr = nlohmann::json::array();
    for (const auto& p : plans)
        arr.push_back({{"gamma", p.gamma},
                       {"target", to_string(p.target)},
                       {"n_opt", p.n_opt},
                       {"N_opt", p.sample_size_opt},
                       {"relation_exponent", p.relation_exponent},
                       {"n_continuous", p.n_continuous},
                       {"N_continuous", p.sample_size_continuous}});
    return arr;
}

inline void write_coefficients_csv(std::ostream& os, const std::vector<CoefficientRow>& rows)
{
    os << "n,m,N,i,g_estimate,g_exact,f_estimate,f_exact,seed,replicate\n";
    for (const auto& r : rows)
        os << r.n << ',' << r.m << ',' << r.sample_size << ',' << r.i << ',' << format_shortest(r.g_estimate) << ','
           << format_shortest(r.g_exact) << ',' << format_shortest(r.f_estimate) << ','
           << format_shortest(r.f_exact) << ',' << r.seed << ',' << r.replicate << '\n';
}

inline nlohmann::json coefficients_json(const std::vector<CoefficientRow>& rows)
{
    auto arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"n", r.n},
                       {"m", r.m},
                       {"N", r.sample_size},
                       {"i", r.i},
                       {"g_estimate", r.g_estimate},
                       {"g_exact", r.g_exact},
                       {"f_estimate", r.f_estimate},
                       {"f_exact", r.f_exact},
                       {"seed", r.seed},
                       {"replicate", r.replicate}});
    return arr;
}

/// Header line plus one sample per line.
inline void write_samples(std::ostream& os, const SampleBatch& batch)
{
    os << "# family=" << batch.family.nu1() << ',' << batch.family.nu2() << " seed=" << batch.seed
       << " stream=" << batch.stream_id << " count=" << batch.size() << '\n';
    for (double v : batch.values)
        os << format_shortest(v) << '\n';
}

inline void write_samples_file(const std::string& path, const SampleBatch& batch)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    write_samples(out, batch);
    out.flush();
    if (!out)
        throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace legproj
