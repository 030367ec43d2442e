#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "greedyq/experiments.hpp"

using namespace greedyq;
namespace fs = std::filesystem;

namespace {

struct Proc {
    int code;
    std::string out;
};

Proc run_cli(const std::string& args, const fs::path& cwd) {
    const std::string cmd = "cd '" + cwd.string() + "' && " + GREEDYQ_CLI_PATH + " " + args + " 2>&1";
    Proc p{0, {}};
    FILE* f = popen(cmd.c_str(), "r");
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, f)) p.out.append(buf, n);
    const int status = pclose(f);
    p.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("greedyq_cli_" + std::to_string(::getpid()) + "_" +
                                           ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path dir;
};

}  // namespace

TEST(ConfigParse, SingleExperimentDefaults) {
    const auto cs = parse_config_text("experiment = \"greedy1d_uniform\"\n");
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].n_max, 5000u);
    EXPECT_EQ(cs[0].distribution, "uniform01");
    EXPECT_EQ(cs[0].label, "greedy1d_uniform");
}

TEST(ConfigParse, ErrorsCarryLineNumbers) {
    auto line_of = [](const std::string& text) {
        try {
            parse_config_text(text);
        } catch (const ConfigError& e) {
            return e.line();
        }
        return -1;
    };
    EXPECT_EQ(line_of("experiment = \"vdc_constants\"\n\nbogus = 1\n"), 3);
    EXPECT_EQ(line_of("experiment = \"vdc_constants\"\nn_max = \"many\"\n"), 2);
    EXPECT_EQ(line_of("experiment = \"nope\"\n"), 1);
    EXPECT_EQ(line_of("experiment = \"greedy1d_uniform\"\ndistribution = \"cauchy\"\n"), 2);
    EXPECT_EQ(line_of("experiment = \"mismatch\"\nq = [2.5, \"x\"]\n"), 2);
    EXPECT_EQ(line_of("experiment = [\n"), 1);
    EXPECT_THROW(parse_config_text(""), ConfigError);
}

TEST(ConfigParse, SeedRules) {
    EXPECT_THROW(parse_config_text("experiment = \"greedy_nd_normal2\"\n"), ConfigError);
    auto cs = parse_config_text("experiment = \"greedy_nd_normal2\"\nseed = \"0xffffffffffffffff\"\nM = \"500 + 20*N\"\n");
    EXPECT_EQ(*cs[0].seed, 0xffffffffffffffffULL);
    EXPECT_EQ(cs[0].mc_base, 500u);
    EXPECT_EQ(cs[0].mc_per_level, 20u);
    EXPECT_THROW(parse_config_text("experiment = \"greedy_nd_normal2\"\nseed = -3\n"), ConfigError);
    EXPECT_THROW(parse_config_text("experiment = \"greedy_nd_normal2\"\nseed = 1\nM = \"N^2\"\n"), ConfigError);
}

TEST(ConfigParse, BatchInheritsTopLevelKeys) {
    const auto cs = parse_config_text(
        "n_max = 64\n[[experiments]]\nexperiment = \"vdc_constants\"\nlabel = \"a\"\n"
        "[[experiments]]\nexperiment = \"greedy1d_uniform\"\nn_max = 32\nlabel = \"b\"\n");
    ASSERT_EQ(cs.size(), 2u);
    EXPECT_EQ(cs[0].n_max, 64u);
    EXPECT_EQ(cs[1].n_max, 32u);
    EXPECT_THROW(parse_config_text("[[experiments]]\nexperiment = \"vdc_constants\"\n"
                                   "[[experiments]]\nexperiment = \"vdc_constants\"\n"),
                 ConfigError);  // both default to out/vdc_constants
}

TEST(ConfigParse, GeneratedConfigsAreValid) {
    for (const auto& e : experiment_names()) {
        const auto cs = parse_config_text(default_config(e));
        ASSERT_EQ(cs.size(), 1u);
        EXPECT_EQ(cs[0].experiment, e);
    }
}

TEST_F(CliTest, EmptyConfigIsUsageError) {
    write(dir / "empty.toml", "");
    const auto p = run_cli("run empty.toml", dir);
    EXPECT_EQ(p.code, 2);
    EXPECT_NE(p.out.find("usage"), std::string::npos);
    EXPECT_EQ(run_cli("", dir).code, 2);
    EXPECT_EQ(run_cli("gen-config nope", dir).code, 2);
}

TEST_F(CliTest, InvalidConfigReportsLine) {
    write(dir / "bad.toml", "experiment = \"vdc_constants\"\np = 1\nn_max = -5\n");
    const auto p = run_cli("run bad.toml", dir);
    EXPECT_EQ(p.code, 2);
    EXPECT_NE(p.out.find("line 3"), std::string::npos) << p.out;
}

TEST_F(CliTest, VdcL1Summary) {
    write(dir / "v.toml", "experiment = \"vdc_constants\"\np = 1\nn_max = 4096\noutput_dir = \"o\"\n");
    ASSERT_EQ(run_cli("run v.toml", dir).code, 0);
    const auto s = json::parse(slurp(dir / "o" / "summary.json"));
    EXPECT_EQ(s["schema_version"], kSummarySchemaVersion);
    EXPECT_NEAR(s["liminf_proxy"].get<double>(), 0.25, 0.005);
    for (const char* f : {"scaled.csv", "scaled.svg", "sequence.csv"}) EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
}

TEST_F(CliTest, GreedyUniformSummaryAndByteIdenticalReruns) {
    write(dir / "g.toml", "experiment = \"greedy1d_uniform\"\nn_max = 5000\noutput_dir = \"o\"\n");
    ASSERT_EQ(run_cli("run g.toml", dir).code, 0);
    const auto s = json::parse(slurp(dir / "o" / "summary.json"));
    const double sup = s["limsup_proxy"].get<double>();
    EXPECT_GE(sup, 0.315);
    EXPECT_LE(sup, 0.340);
    EXPECT_TRUE(s["checks"]["strictly_decreasing"].get<bool>());
    const auto first = slurp(dir / "o" / "trajectory.csv");
    const auto first_seq = slurp(dir / "o" / "sequence.csv");
    ASSERT_EQ(run_cli("run g.toml", dir).code, 0);
    EXPECT_EQ(slurp(dir / "o" / "trajectory.csv"), first);
    EXPECT_EQ(slurp(dir / "o" / "sequence.csv"), first_seq);
    EXPECT_EQ(first.substr(0, first.find('\n')), "N,e_p,residual,iters");
}

TEST_F(CliTest, FailureKeepsPartialArtifacts) {
    // a Dirac law has no density, so the diagnostics run fails after its first artifact
    write(dir / "d.toml", "experiment = \"diagnostics\"\ndistribution = \"dirac(0.3)\"\nn_max = 5\noutput_dir = \"o\"\n");
    const auto p = run_cli("run d.toml", dir);
    EXPECT_EQ(p.code, 1);
    EXPECT_TRUE(fs::exists(dir / "o" / "maximal_function.csv.partial"));
    EXPECT_TRUE(fs::exists(dir / "o" / "error.txt.partial"));
    EXPECT_FALSE(fs::exists(dir / "o" / "summary.json"));
}

TEST_F(CliTest, CompareReport) {
    write(dir / "c.toml",
          "n_max = 256\n[[experiments]]\nexperiment = \"concat_compare\"\noutput_dir = \"cc\"\n"
          "[[experiments]]\nexperiment = \"greedy1d_uniform\"\noutput_dir = \"gu\"\n"
          "[[experiments]]\nexperiment = \"greedy1d_uniform\"\nn_max = 100\nlabel = \"short\"\noutput_dir = \"gs\"\n");
    ASSERT_EQ(run_cli("run c.toml", dir).code, 0);

    const auto single = run_cli("compare cc", dir);
    ASSERT_EQ(single.code, 0);
    EXPECT_EQ(single.out, slurp(dir / "cc" / "scaled.csv"));

    ASSERT_EQ(run_cli("compare cc gu -o merged.csv", dir).code, 0);
    const auto t = io::read_csv(dir / "merged.csv");
    const std::size_t opt = t.column("optimal_ratio"), g = t.column("greedy"), v = t.column("vdc");
    double gmax = 0, vmax = 0;
    for (const auto& r : t.rows) {
        ASSERT_NEAR(r[opt], 1.0, 1e-10);
        if (r[0] >= 100) gmax = std::max(gmax, r[g]), vmax = std::max(vmax, r[v]);
    }
    EXPECT_LT(gmax, vmax);
    EXPECT_NO_THROW(t.column("greedy1d_uniform_ratio"));

    const auto bad = run_cli("compare gu gs", dir);
    EXPECT_NE(bad.code, 0);
    EXPECT_NE(bad.out.find("gu/scaled.csv"), std::string::npos) << bad.out;
    EXPECT_NE(bad.out.find("gs/scaled.csv"), std::string::npos) << bad.out;
}

TEST_F(CliTest, StochasticSummaryIndependentOfThreads) {
    write(dir / "s.toml",
          "experiment = \"greedy_nd_normal2\"\nn_max = 8\nseed = 99\nM = \"300*N\"\neval_samples = 30000\n"
          "output_dir = \"o\"\n");
    std::vector<std::string> summaries;
    for (const char* t : {"1", "4"}) {
        const std::string cmd =
            "cd '" + dir.string() + "' && GREEDYQ_THREADS=" + t + " " + GREEDYQ_CLI_PATH + " run s.toml >/dev/null 2>&1";
        ASSERT_EQ(std::system(cmd.c_str()), 0);
        summaries.push_back(slurp(dir / "o" / "summary.json"));
    }
    EXPECT_EQ(summaries[0], summaries[1]);
}

TEST_F(CliTest, ShippedConfigsParse) {
    for (const auto& entry : fs::directory_iterator(fs::path(GREEDYQ_SOURCE_DIR) / "configs")) {
        if (entry.path().extension() != ".toml") continue;
        EXPECT_NO_THROW(parse_config_file(entry.path())) << entry.path();
    }
}
