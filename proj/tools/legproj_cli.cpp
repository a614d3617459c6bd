// legproj: reproduce error tables, fit bound constants, plan (n, N) and draw
// samples from the test family.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 numerical failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "legproj/legproj.hpp"

namespace {

using namespace legproj;

struct Options
{
    ExperimentConfig config;
    std::string format = "csv";
    std::string out;
    int algorithm = 2;
    std::vector<double> gammas{0.1, 0.05, 0.025, 0.0125};
    double c1 = 0.0;
    double c2 = 0.0;
    double s = 0.0;
    std::string target = "g";
    std::int64_t count = 1000;
    std::uint64_t stream = 0;
    bool average = false;
};

void add_family(CLI::App* cmd, Options& o)
{
    cmd->add_option("--nu1", o.config.nu1, "left exponent of the test family")->capture_default_str();
    cmd->add_option("--nu2", o.config.nu2, "right exponent of the test family")->capture_default_str();
}

void add_output(CLI::App* cmd, Options& o)
{
    cmd->add_option("--format", o.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--out", o.out, "output file (default: stdout)");
}

void add_grid(CLI::App* cmd, Options& o)
{
    cmd->add_option("--n", o.config.n_list, "expansion length (repeatable)")->take_all()->capture_default_str();
    cmd->add_option("--m", o.config.m_list, "sample size exponent, N = 2^(m+9) (repeatable)")
        ->take_all()
        ->capture_default_str();
    cmd->add_option("--seed", o.config.seed, "base seed; cell seeds are derived from it")->capture_default_str();
    cmd->add_option("--replicates", o.config.replicates, "independent runs per cell")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--algorithm", o.algorithm, "1 = moments, 2 = direct recurrence")
        ->check(CLI::IsMember({1, 2}))
        ->capture_default_str();
    cmd->add_option("--threads", o.config.threads, "worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--max-m", o.config.max_m, "warn above this m")->capture_default_str();
}

/// Writes to --out or stdout.
class Sink
{
  public:
    explicit Sink(const std::string& path)
    {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_)
                throw std::runtime_error("cannot open '" + path + "' for writing");
        }
        path_ = path;
    }

    std::ostream& stream() { return file_ ? *file_ : std::cout; }

    void close()
    {
        stream().flush();
        if (!stream())
            throw std::runtime_error("write to '" + (path_.empty() ? std::string("stdout") : path_) + "' failed");
    }

  private:
    std::unique_ptr<std::ofstream> file_;
    std::string path_;
};

void finalize(Options& o)
{
    o.config.algorithm = o.algorithm == 1 ? Algorithm::moments : Algorithm::direct;
    o.config.format = o.format == "json" ? OutputFormat::json : OutputFormat::csv;
}

void warn(const std::vector<std::string>& warnings)
{
    for (const auto& w : warnings)
        std::cerr << "warning: " << w << '\n';
}

int cmd_exact(Options& o)
{
    finalize(o);
    const auto rows = run_exact(o.config);
    Sink sink(o.out);
    if (o.config.format == OutputFormat::json)
        sink.stream() << exact_json(o.config.nu1, o.config.nu2, rows).dump(2) << '\n';
    else
        write_exact_csv(sink.stream(), o.config.nu1, o.config.nu2, rows);
    sink.close();
    return 0;
}

int cmd_table(Options& o)
{
    finalize(o);
    warn(validate_grid(o.config));
    auto rows = run_table(o.config);
    if (o.average)
        rows = average_replicates(rows);
    Sink sink(o.out);
    if (o.config.format == OutputFormat::json)
        sink.stream() << table_json(rows).dump(2) << '\n';
    else
        write_table_csv(sink.stream(), rows);
    sink.close();
    return 0;
}

int cmd_fit(Options& o)
{
    finalize(o);
    warn(validate_grid(o.config));
    const auto fit = run_fit(o.config);
    Sink sink(o.out);
    if (o.config.format == OutputFormat::json)
        sink.stream() << fit_json(fit).dump(2) << '\n';
    else
        write_surface_csv(sink.stream(), fit);
    sink.close();
    return 0;
}

int cmd_optimize(Options& o)
{
    finalize(o);
    const BoundConstants c{o.c1, o.c2, o.s, BoundFlavor::power_law};
    const Target target = o.target == "f" ? Target::f : Target::g;
    std::vector<OptimizationPlan> plans;
    for (double g : o.gammas)
        plans.push_back(optimize(c, g, target));
    Sink sink(o.out);
    if (o.config.format == OutputFormat::json)
        sink.stream() << plans_json(plans).dump(2) << '\n';
    else
        write_plans_csv(sink.stream(), plans);
    sink.close();
    return 0;
}

int cmd_sample(Options& o)
{
    finalize(o);
    if (o.count < 1)
        throw std::invalid_argument("--count must be >= 1");
    const TestFamilySampler sampler(o.config.family());
    RngStream rng(o.config.seed, o.stream);
    const auto batch = sample(sampler, rng, o.count);
    if (o.out.empty()) {
        write_samples(std::cout, batch);
        std::cout.flush();
    } else {
        write_samples_file(o.out, batch);
    }
    return 0;
}

int cmd_estimate(Options& o)
{
    finalize(o);
    warn(validate_grid(o.config));
    const auto rows = run_estimate(o.config);
    Sink sink(o.out);
    if (o.config.format == OutputFormat::json)
        sink.stream() << coefficients_json(rows).dump(2) << '\n';
    else
        write_coefficients_csv(sink.stream(), rows);
    sink.close();
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Projection estimates of densities and distribution functions in Legendre polynomials"};
    app.require_subcommand(1);
    Options o;

    auto* exact = app.add_subcommand("exact", "exact truncation errors of the test family");
    add_family(exact, o);
    exact->add_option("--n", o.config.n_list, "expansion length (repeatable)")->take_all()->capture_default_str();
    add_output(exact, o);

    auto* table = app.add_subcommand("table", "error grid over (n, m) with eps_det / eps_stoch / eps_total");
    add_family(table, o);
    add_grid(table, o);
    add_output(table, o);
    table->add_flag("--average", o.average, "emit root-mean-square over replicates");

    auto* fit = app.add_subcommand("fit", "fit bound constants over a grid, emit both surfaces");
    add_family(fit, o);
    add_grid(fit, o);
    add_output(fit, o);

    auto* opt = app.add_subcommand("optimize", "conditionally optimal (n, N) for target accuracies");
    opt->add_option("--gamma", o.gammas, "target accuracy (repeatable)")->take_all()->capture_default_str();
    opt->add_option("--c1", o.c1, "stochastic constant")->required();
    opt->add_option("--c2", o.c2, "deterministic constant")->required();
    opt->add_option("--s", o.s, "smoothness")->required();
    opt->add_option("--target", o.target, "g = density, f = distribution function")
        ->check(CLI::IsMember({"g", "f"}))
        ->capture_default_str();
    add_output(opt, o);

    auto* smp = app.add_subcommand("sample", "draw samples by the inverse function method");
    add_family(smp, o);
    smp->add_option("--count", o.count, "number of samples")->capture_default_str();
    smp->add_option("--seed", o.config.seed, "seed")->capture_default_str();
    smp->add_option("--stream", o.stream, "stream id")->capture_default_str();
    smp->add_option("--out", o.out, "output file (default: stdout)");

    auto* est = app.add_subcommand("estimate", "estimated and exact coefficients per cell");
    add_family(est, o);
    add_grid(est, o);
    add_output(est, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*exact)
            return cmd_exact(o);
        if (*table)
            return cmd_table(o);
        if (*fit)
            return cmd_fit(o);
        if (*opt)
            return cmd_optimize(o);
        if (*smp)
            return cmd_sample(o);
        if (*est)
            return cmd_estimate(o);
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
