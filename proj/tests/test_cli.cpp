#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kCli = OPTOSPEC_CLI;
const fs::path kConfigs = OPTOSPEC_CONFIGS;

struct Result {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("optospec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    fs::path write(const std::string& name, const std::string& text) {
        std::ofstream(dir / name, std::ios::binary) << text;
        return dir / name;
    }

    Result invoke(const std::string& args, const std::string& env = "") {
        const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" + kCli.string() + "' " + args +
                                " > stdout.txt 2> stderr.txt";
        const int status = std::system(cmd.c_str());
        Result r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(dir / "stdout.txt");
        r.err = slurp(dir / "stderr.txt");
        return r;
    }
};

std::string without_timestamp(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.find("\"timestamp\"") == std::string::npos) out += line + "\n";
    return out;
}

const char* kSmallOracle = R"({"mode": "oracle-check", "g": 0.3, "gamma_c": 0.2, "mirror": "number 0",
  "oracle": {"half_span": 6, "n_phonon": 6, "t_final": 100, "tolerance": TOL}, "output": "cmp.csv"})";

std::string small_oracle(const std::string& tol) {
    std::string s = kSmallOracle;
    s.replace(s.find("TOL"), 3, tol);
    return s;
}

}  // namespace

TEST_F(Cli, RunWritesCsvAndMetadata) {
    const auto r = invoke("run '" + (kConfigs / "emission_number.json").string() + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto csv = dir / "emission_number.csv";
    ASSERT_TRUE(fs::exists(csv));
    const std::string text = slurp(csv);
    EXPECT_EQ(text.rfind("delta_k,S\n", 0), 0u);
    EXPECT_EQ(text.find('\r'), std::string::npos);
    const auto meta = nlohmann::json::parse(slurp(dir / "emission_number.meta"));
    EXPECT_EQ(meta["config"]["g"], 0.8);
    EXPECT_TRUE(meta.contains("norm_deficit"));
    EXPECT_GE(meta["peaks"].size(), 2u);
}

TEST_F(Cli, EverySampleConfigRuns) {
    for (const char* name : {"emission_shorthand", "emission_displaced_ground", "emission_number", "emission_coherent",
                             "emission_thermal", "scattering_broadband", "scattering_resonant"}) {
        const auto r = invoke("run '" + (kConfigs / (std::string(name) + ".json")).string() + "'");
        EXPECT_EQ(r.code, 0) << name << ": " << r.err;
        // Plot windows cut off the Lorentzian tails; only the norm warning may appear.
        std::istringstream lines(r.err);
        for (std::string line; std::getline(lines, line);)
            EXPECT_EQ(line.rfind("warning: grid too narrow", 0), 0u) << name << ": " << line;
    }
}

TEST_F(Cli, DeterministicAcrossRunsAndThreadCounts) {
    const auto cfg = (kConfigs / "emission_thermal.json").string();
    const auto csv = fs::path(nlohmann::json::parse(slurp(cfg))["output"].get<std::string>());
    ASSERT_EQ(invoke("run '" + cfg + "'", "OPTOSPEC_THREADS=1").code, 0);
    const std::string csv1 = slurp(dir / csv);
    const std::string meta1 = slurp(dir / fs::path(csv).replace_extension(".meta"));
    ASSERT_EQ(invoke("run '" + cfg + "'", "OPTOSPEC_THREADS=4").code, 0);
    EXPECT_EQ(slurp(dir / csv), csv1);
    EXPECT_EQ(without_timestamp(slurp(dir / fs::path(csv).replace_extension(".meta"))), without_timestamp(meta1));
}

TEST_F(Cli, DisplacedGroundPeaksAreRedOnly) {
    ASSERT_EQ(invoke("run '" + (kConfigs / "emission_displaced_ground.json").string() + "'").code, 0);
    const auto meta = nlohmann::json::parse(slurp(dir / "emission_displaced_ground.meta"));
    ASSERT_FALSE(meta["peaks"].empty());
    for (const auto& p : meta["peaks"]) EXPECT_LE(p["location"].get<double>(), 0.0);
}

TEST_F(Cli, PeaksSubcommand) {
    ASSERT_EQ(invoke("run '" + (kConfigs / "scattering_broadband.json").string() + "'").code, 0);
    const auto all = invoke("peaks scattering_broadband.csv --min-height 0.05");
    ASSERT_EQ(all.code, 0) << all.err;
    EXPECT_EQ(all.out.rfind("location,height,width,is_dip\n", 0), 0u);
    EXPECT_NE(all.out.find(",1\n"), std::string::npos) << "expected a dip:\n" << all.out;
    const auto strict = invoke("peaks scattering_broadband.csv --min-height 0.9");
    ASSERT_EQ(strict.code, 0);
    EXPECT_LT(strict.out.size(), all.out.size());
    EXPECT_EQ(invoke("peaks missing.csv").code, 1);
}

TEST_F(Cli, ValidationFailuresExitOne) {
    write("bad.json", R"({"mode": "emission", "g": 0.8, "gamma_c": -1, "mirror": "number 0", "colour": 1})");
    const auto r = invoke("run bad.json");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("gamma_c"), std::string::npos);
    EXPECT_NE(r.err.find("colour"), std::string::npos);

    write("scatter.json", R"({"mode": "scattering", "g": 0.8, "gamma_c": 0.2, "mirror": "number 0"})");
    EXPECT_EQ(invoke("run scatter.json").code, 1);
    EXPECT_EQ(invoke("run does_not_exist.json").code, 1);
    EXPECT_EQ(invoke("").code, 1);
    EXPECT_EQ(invoke("frobnicate x").code, 1);

    write("thermal_check.json", R"({"mode": "emission", "g": 0.8, "gamma_c": 0.2, "mirror": "thermal 1"})");
    EXPECT_EQ(invoke("check thermal_check.json").code, 1);
}

TEST_F(Cli, NumericalFailureExitsTwo) {
    write("cut.json", R"({"mode": "emission", "g": 0.8, "gamma_c": 0.2, "mirror": "coherent 3",
                          "truncation": {"n_phonon_max": 10}})");
    const auto r = invoke("run cut.json");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(Cli, CheckReportsAndExitsThreeAboveTolerance) {
    write("ok.json", small_oracle("0.03"));
    const auto ok = invoke("check ok.json");
    EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
    EXPECT_NE(ok.out.find("max |S_analytic - S_oracle|"), std::string::npos);
    EXPECT_NE(ok.out.find("PASS"), std::string::npos);
    EXPECT_EQ(slurp(dir / "cmp.csv").rfind("delta_k,S_analytic,S_oracle\n", 0), 0u);
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "cmp.meta"))["passed"], true);

    write("tight.json", small_oracle("1e-6"));
    const auto tight = invoke("check tight.json");
    EXPECT_EQ(tight.code, 3);
    EXPECT_NE(tight.out.find("FAIL"), std::string::npos);
    // `run` on an oracle-check config performs the same comparison.
    EXPECT_EQ(invoke("run tight.json").code, 3);
}
