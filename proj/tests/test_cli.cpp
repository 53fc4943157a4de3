#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "degen_kpp/cli/commands.hpp"

namespace fs = std::filesystem;
using degen_kpp::cli::Json;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
    Json json() const { return Json::parse(out); }
    Json error() const { return Json::parse(err); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch() {
    const auto d = fs::temp_directory_path() / ("degen_kpp_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
}

Run run(const std::string& args, const std::string& env = "") {
    const auto d = scratch();
    const auto out = d / "stdout", err = d / "stderr";
    const std::string cmd = env + " " + DEGEN_KPP_CLI_PATH + " " + args + " > " + out.string() + " 2> " +
                            err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

class ScratchCleanup : public ::testing::Environment {
public:
    void TearDown() override { fs::remove_all(scratch()); }
};

const auto* const cleanup = ::testing::AddGlobalTestEnvironment(new ScratchCleanup);

}  // namespace

TEST(Lambda, CriticalSpeed) {
    const auto r = run("lambda --c 2");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = r.json();
    EXPECT_EQ(j["lambda_minus"].get<double>(), 1.0);
    EXPECT_EQ(j["lambda_plus"].get<double>(), 1.0);
    EXPECT_EQ(j["schema"], degen_kpp::report_schema);
    EXPECT_EQ(j["config"]["c"].get<double>(), 2.0);
}

TEST(Lambda, TwoAndAHalf) {
    const auto j = run("lambda --c 2.5").json();
    EXPECT_DOUBLE_EQ(j["lambda_minus"].get<double>(), 0.5);
    EXPECT_DOUBLE_EQ(j["lambda_plus"].get<double>(), 2.0);
    EXPECT_DOUBLE_EQ(j["lambda_plus_sq_over_16"].get<double>(), 0.25);
}

TEST(Lambda, NoWavesBelowTwo) {
    const auto r = run("lambda --c 1.9");
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(r.error()["reason"], "no_waves_below_2");
    EXPECT_NE(r.err.find("no waves for c<2"), std::string::npos);
}

TEST(Classify, TableAndClasses) {
    auto r = run("classify --c 2.1");
    ASSERT_EQ(r.code, 0) << r.err;
    auto t = r.json()["table"];
    EXPECT_TRUE(t["chain_holds"].get<bool>());
    const double bt = t["bell_top"].get<double>();
    EXPECT_NEAR(bt, 0.0141723, 1e-6);
    char arg[64];
    std::snprintf(arg, sizeof arg, "%.17g", bt);
    r = run(std::string("classify --c 2.1 --alpha ") + arg);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["class"], "SaturatedB");
    r = run("classify --c 2.1 --alpha 1e9");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["class"], "AboveMax");
}

TEST(Wave, SmallSpecial) {
    const auto r = run("wave --c 2.1 --special small");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto w = r.json()["wave"];
    EXPECT_EQ(w["class"], "NonSaturated");
    EXPECT_EQ(w["z_star"], "-inf");
    EXPECT_NEAR(w["right_tail"]["rate"].get<double>(), 0.7298, 0.02 * 0.7298);
    EXPECT_NEAR(w["left_tail"]["rate"].get<double>(), 0.4762, 0.02 * 0.4762);
}

TEST(Wave, LargeSpecial) {
    const auto r = run("wave --c 2.1 --special large");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto w = r.json()["wave"];
    EXPECT_EQ(w["saturated"], true);
    EXPECT_LT(w["z_star"].get<double>(), 0.0);
    EXPECT_NEAR(w["right_tail"]["rate"].get<double>(), 1.3702, 0.03 * 1.3702);
}

TEST(Wave, BelowSmallSolutionHasNoWave) {
    const auto r = run("wave --c 2.1 --alpha 0.001");
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(r.error()["reason"], "no_wave_for_alpha");
    EXPECT_NE(r.err.find("no wave for this alpha"), std::string::npos);
}

TEST(Wave, CsvOutputIsLossless) {
    const auto d = scratch() / "wave_csv";
    const auto r = run("wave --c 2.1 --alpha 0.5 --format csv --samples 500 --out " + d.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, slurp(d / "wave.csv"));
    std::istringstream in(r.out);
    std::string line;
    int comments = 0;
    bool config = false, header = false;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) == 0) {
            ++comments;
            config = config || line.find("\"samples\":500") != std::string::npos;
            continue;
        }
        if (!header) {
            EXPECT_EQ(line, "z,u,one_minus_u");
            header = true;
            continue;
        }
        const double z = std::stod(line.substr(0, line.find(',')));
        std::ostringstream back;
        back << degen_kpp::io::format_double(z);
        EXPECT_EQ(back.str(), line.substr(0, line.find(',')));
        break;
    }
    EXPECT_GE(comments, 3);
    EXPECT_TRUE(config);
    EXPECT_TRUE(fs::exists(d / "wave.json"));
}

TEST(Wave, OutputIsDeterministic) {
    const auto a = run("wave --c 2.1 --special small --samples 400");
    const auto b = run("wave --c 2.1 --special small --samples 400");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
}

TEST(Figure, WavesAndPhasePlots) {
    const auto d = scratch() / "fig";
    const auto r = run("figure --c 2.1 --out " + d.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = r.json();
    EXPECT_EQ(j["waves"].size(), 4u);
    EXPECT_TRUE(j["crossings_at_zero"].get<bool>());
    EXPECT_TRUE(j["ordering"].get<bool>());
    for (const char* f : {"figure_waves.csv", "figure_waves.svg", "figure_phase.csv", "figure_phase.svg",
                          "figure_phase_log.csv", "figure_phase_log.svg"}) {
        ASSERT_TRUE(fs::exists(d / f)) << f;
        EXPECT_NE(slurp(d / f).find(degen_kpp::version), std::string::npos) << f;
    }
    const auto svg = slurp(d / "figure_phase_log.svg");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("lambda+ bell"), std::string::npos);
}

TEST(Figure, SvgOnStdout) {
    const auto d = scratch() / "fig3";
    const auto r = run("figure --c 2.1 --which phase-log --format svg --out " + d.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, slurp(d / "figure_phase_log.svg"));
    EXPECT_EQ(run("lambda --c 2.1 --format svg").code, degen_kpp::cli::exit_usage);
    EXPECT_EQ(run("verify --format csv").code, degen_kpp::cli::exit_usage);
    const auto csv = run("figure --c 2.1 --which waves --format csv --out " + d.string());
    ASSERT_EQ(csv.code, 0) << csv.err;
    EXPECT_EQ(csv.out, slurp(d / "figure_waves.csv"));
}

TEST(Figure, CriticalPhasePlaneBellsCoincide) {
    const auto d = scratch() / "fig2";
    const auto r = run("figure --c 2 --which phase --out " + d.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.json()["lambda_bells_coincide"].get<bool>());
    EXPECT_FALSE(fs::exists(d / "figure_waves.svg"));
}

TEST(Verify, Suites) {
    auto r = run("verify --suite subsuper --c 2.1");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.json()["passed"].get<bool>());
    r = run("verify --suite focusing");
    ASSERT_EQ(r.code, 0) << r.err;
    const double slope = r.json()["suites"][0]["cases"][0]["slope"].get<double>();
    EXPECT_GE(slope, 1.8);
    EXPECT_LE(slope, 2.2);
    r = run("verify --suite recursions --c 1.5 --eps 0.1");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.json()["suites"][0]["M"]["first_negative"].get<int>(), 4);
}

TEST(Usage, BadFlagsAreReported) {
    auto r = run("wave --c 2.1 --special medium");
    EXPECT_EQ(r.code, degen_kpp::cli::exit_usage);
    EXPECT_EQ(r.error()["reason"], "usage");
    r = run("wave --c 2.1 --alpha abc");
    EXPECT_EQ(r.code, degen_kpp::cli::exit_usage);
    EXPECT_EQ(r.error()["reason"], "invalid_argument");
    r = run("wave --c 2.1 --alpha 0.5 --special small");
    EXPECT_EQ(r.code, degen_kpp::cli::exit_usage);
}

TEST(Config, FileIsOverriddenByFlags) {
    const auto f = scratch() / "cfg.txt";
    std::ofstream(f) << "# speed\nc = 2.5\nsamples=300\n";
    auto r = run("lambda --config " + f.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_DOUBLE_EQ(r.json()["lambda_plus"].get<double>(), 2.0);
    r = run("lambda --c 2 --config " + f.string());
    EXPECT_EQ(r.json()["lambda_plus"].get<double>(), 1.0);
    EXPECT_EQ(r.json()["config"]["samples"].get<int>(), 300);
    r = run("lambda", "DEGEN_KPP_CONFIG=" + f.string());
    EXPECT_DOUBLE_EQ(r.json()["lambda_plus"].get<double>(), 2.0);
}

TEST(Config, ResolvedInProcess) {
    using namespace degen_kpp::cli;
    const auto kv = parse_config_text("c=3\n\n  tol-bisect = 1e-9 \n# x=1\n");
    ASSERT_EQ(kv.size(), 2u);
    const auto cfg = resolve_config("classify", {{"c", "2.2"}}, "", nullptr);
    EXPECT_EQ(cfg.c, 2.2);
    EXPECT_THROW(parse_config_text("c 3"), CommandError);
    EXPECT_THROW(resolve_config("lambda", {{"bogus", "1"}}, "", nullptr), CommandError);
    EXPECT_THROW(resolve_config("lambda", {{"tol_bisect", "1e-20"}}, "", nullptr), CommandError);
}
