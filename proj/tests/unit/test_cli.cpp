#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

fs::path scratch() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / ("alloyloc_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run cli(const std::string& args) {
    static int counter = 0;
    const auto out = scratch() / ("stdout_" + std::to_string(counter++));
    const std::string cmd = std::string("\"") + ALLOYLOC_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return Run{WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out)};
}

fs::path write_file(const std::string& name, const std::string& text) {
    const auto p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST(Cli, SelftestPasses) {
    const auto r = cli("selftest");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("all_pass\":true"), std::string::npos);
}

TEST(Cli, MsaConfigRunIsByteIdenticalAndThreadInvariant) {
    const auto cfg = write_file("msa.json", R"({"trials": 60, "kmax": 1, "E": 50})");
    const std::string base = "msa --config \"" + cfg.string() + "\" --seed 7";
    const auto a = cli(base + " --threads 1");
    const auto b = cli(base + " --threads 1");
    const auto c = cli(base + " --threads 3");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, c.out);
    EXPECT_NE(a.out.find("master_seed=7"), std::string::npos);
    EXPECT_NE(a.out.find("\"trials\":60"), std::string::npos);
}

TEST(Cli, FlagOverridesConfig) {
    const auto cfg = write_file("efc.json", R"({"samples": 40, "L": 6, "r": [1, 3]})");
    const auto r = cli("efc --config \"" + cfg.string() + "\" --samples 20 --format json");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["config"]["samples"], 20);
    EXPECT_EQ(j["config"]["L"], 6);
    EXPECT_EQ(j["rows"].size(), 2u);
    EXPECT_EQ(j["tool"], "alloyloc");
    EXPECT_EQ(j["subcommand"], "efc");
}

TEST(Cli, CsvHeaderLines) {
    const auto r = cli("charfun --points 6 --tmin 10 --tmax 1000 --seed 3");
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# tool=alloyloc version=", 0), 0u);
    EXPECT_NE(line.find("master_seed=3"), std::string::npos);
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# config=", 0), 0u);
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# results=", 0), 0u);
    std::getline(in, line);
    EXPECT_EQ(line, "t,log_inv_modulus");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, 6);
}

TEST(Cli, OutputFile) {
    const auto path = scratch() / "thin.csv";
    const auto r = cli("ils-thin --trials 500 --out \"" + path.string() + "\"");
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    EXPECT_NE(slurp(path).find("subcommand=ils-thin"), std::string::npos);
}

TEST(Cli, ConfigurationErrorsExitTwo) {
    EXPECT_EQ(cli("msa --no-such-flag").code, 2);
    EXPECT_EQ(cli("").code, 2);
    EXPECT_EQ(cli("charfun --format xml").code, 2);
    EXPECT_EQ(cli("charfun --out /no/such/dir/x.csv").code, 2);
    EXPECT_EQ(cli("msa --b 0.5 --trials 10").code, 2);
    EXPECT_EQ(cli("wegner --trials 10").code, 2);
    EXPECT_EQ(cli("ils-thin --dist bernoulli-sym --trials 200").code, 2);
    const auto unknown = write_file("unknown.json", R"({"trials": 10, "colour": "red"})");
    EXPECT_EQ(cli("msa --config \"" + unknown.string() + "\"").code, 2);
    const auto broken = write_file("broken.json", "{ trials: ");
    EXPECT_EQ(cli("msa --config \"" + broken.string() + "\"").code, 2);
    EXPECT_EQ(cli("msa --config \"" + (scratch() / "missing.json").string() + "\"").code, 2);
}

TEST(Cli, HelpAndVersionExitZero) {
    EXPECT_EQ(cli("--help").code, 0);
    EXPECT_EQ(cli("--version").code, 0);
    EXPECT_EQ(cli("msa --help").code, 0);
}
