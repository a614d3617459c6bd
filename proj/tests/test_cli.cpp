#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "legproj/testfam.hpp"

namespace {

struct Result
{
    int code = -1;
    std::string out;
};

Result run(const std::string& args)
{
    const std::string cmd = std::string(LEGPROJ_CLI_PATH) + " " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe)
        return r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0)
        r.out.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("legproj_cli_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(Cli, ExactTable1)
{
    const auto r = run("exact --nu1 1 --nu2 2");
    ASSERT_EQ(r.code, 0);
    for (const char* v : {"0.024614", "0.009800", "0.003838", "0.001442", "0.000527", "6.48e-6"})
        EXPECT_NE(r.out.find(v), std::string::npos) << v;
}

TEST(Cli, ExactJson)
{
    const auto r = run("exact --nu1 3 --nu2 2 --n 32 --format json");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j[0]["display_f"], "1.40e-6");
}

TEST(Cli, OptimizeExample)
{
    const auto r = run("optimize --c1 0.885 --c2 0.276 --s 1.5 --gamma 0.05");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("0.05,g,7,4956,4,"), std::string::npos) << r.out;
}

TEST(Cli, SampleDeterministicFiles)
{
    const auto a = temp_path("a.txt");
    const auto b = temp_path("b.txt");
    ASSERT_EQ(run("sample --nu1 1 --nu2 2 --count 5 --seed 1 --out " + a.string()).code, 0);
    ASSERT_EQ(run("sample --nu1 1 --nu2 2 --count 5 --seed 1 --out " + b.string()).code, 0);
    const std::string text = slurp(a);
    EXPECT_EQ(text, slurp(b));
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# family=1,2 seed=1 stream=0 count=5");
    int count = 0;
    while (std::getline(in, line)) {
        const double v = std::stod(line);
        EXPECT_GT(v, -1.0);
        EXPECT_LT(v, 1.0);
        ++count;
    }
    EXPECT_EQ(count, 5);
    std::filesystem::remove(a);
    std::filesystem::remove(b);
}

TEST(Cli, SampleLargeBatchFitsDistribution)
{
    const auto path = temp_path("ks.txt");
    ASSERT_EQ(run("sample --nu1 3 --nu2 2 --count 1000000 --seed 3 --out " + path.string()).code, 0);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::vector<double> xs;
    xs.reserve(1000000);
    while (std::getline(in, line))
        xs.push_back(std::stod(line));
    ASSERT_EQ(xs.size(), 1000000u);
    std::sort(xs.begin(), xs.end());
    const legproj::TestFamily p(3, 2);
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = legproj::distribution(p, xs[i]);
        d = std::max({d, (i + 1.0) / xs.size() - f, f - double(i) / xs.size()});
    }
    EXPECT_LT(d, 1.63 / 1000.0);
    std::filesystem::remove(path);
}

TEST(Cli, TableCsv)
{
    const auto r = run("table --n 4 --n 8 --m 0 --m 1 --seed 3");
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    std::string line;
    int lines = 0;
    while (std::getline(in, line))
        ++lines;
    EXPECT_EQ(lines, 1 + 2 * 2 * 2);
    EXPECT_EQ(r.out, run("table --n 4 --n 8 --m 0 --m 1 --seed 3").out);
}

TEST(Cli, FitAndEstimate)
{
    const auto fit = run("fit --n 4 --n 8 --m 0 --m 2 --m 4 --format json");
    ASSERT_EQ(fit.code, 0);
    const auto j = nlohmann::json::parse(fit.out);
    EXPECT_GT(j["c1"].get<double>(), 0.0);
    EXPECT_EQ(j["surface"].size(), 6u);
    const auto est = run("estimate --n 4 --m 0 --algorithm 1");
    ASSERT_EQ(est.code, 0);
    EXPECT_NE(est.out.find("n,m,N,i,g_estimate"), std::string::npos);
}

TEST(Cli, ExitCodes)
{
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_EQ(run("exact --nu1 2 --nu2 2").code, 1);
    EXPECT_EQ(run("table --algorithm 3").code, 1);
    EXPECT_EQ(run("optimize --c1 1 --c2 1 --s 1 --gamma -1").code, 1);
    EXPECT_EQ(run("sample --count 3 --out /nonexistent-dir/x.txt").code, 1);
    EXPECT_EQ(run("bogus").code, 1);
}
