// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "noisediff/cli.hpp"
#include "noisediff/io.hpp"

namespace nd = noisediff;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    ::testing::internal::CaptureStdout();
    ::testing::internal::CaptureStderr();
    const int code = nd::run_cli(args);
    std::string out = ::testing::internal::GetCapturedStdout();
    std::string err = ::testing::internal::GetCapturedStderr();
    return {code, std::move(out), std::move(err)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root = fs::temp_directory_path() / ("noisediff_cli_" + std::to_string(getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
        const Outcome r = run({"gen-dataset", "--out-dir", (root / "data").string(), "--size", "8", "--components", "3",
                           "--samples", "64", "--seed", "1"});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    static void TearDownTestSuite() { fs::remove_all(root); }

    void SetUp() override { unsetenv("NOISEDIFF_SEED"); }

    static std::string path(const std::string& name) { return (root / name).string(); }
    static std::string data(const std::string& name) { return (root / "data" / name).string(); }

    static std::vector<std::string> interp_args(const std::string& out) {
        return {"interpolate", "--mixture", data("mixture.json"), "--a", data("template_square.pgm"),
                "--b", data("template_disc.pgm"), "--output", path(out)};
    }

    static fs::path root;
};

fs::path CliTest::root;

}  // namespace

TEST_F(CliTest, GenDatasetWritesArtifacts) {
    for (const char* f : {"mixture.json", "center_0.ndtn", "center_2.ndtn", "template_square.pgm",
                          "template_plus.pgm", "samples.ndtn", "checkerboard.ndtn"}) {
        EXPECT_TRUE(fs::exists(data(f))) << f;
    }
    EXPECT_EQ(nd::io::read_tensor(data("samples.ndtn")).shape(), (nd::Shape{64, 8, 8}));
}

TEST_F(CliTest, UnknownFlagPrintsUsageAndFails) {
    const Outcome r = run({"interpolate", "--bogus"});
    EXPECT_EQ(r.code, nd::exit_validation);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_EQ(run({}).code, nd::exit_validation);
    EXPECT_EQ(run({"frobnicate"}).code, nd::exit_validation);
    EXPECT_EQ(run({"--help"}).code, nd::exit_ok);
}

TEST_F(CliTest, ValidationErrorsExitOne) {
    auto args = interp_args("bad.ndtn");
    args.insert(args.end(), {"--gamma", "1"});
    const Outcome r = run(args);
    EXPECT_EQ(r.code, nd::exit_validation);
    EXPECT_NE(r.err.find("gamma"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(path("bad.ndtn")));

    EXPECT_EQ(run({"encode", "--input", data("template_square.pgm"), "--output", path("x.ndtn")}).code,
              nd::exit_validation);
    EXPECT_EQ(run({"encode", "--mixture", data("mixture.json"), "--input", path("missing.ndtn"), "--output",
                   path("x.ndtn")})
                  .code,
              nd::exit_validation);
}

TEST_F(CliTest, NumericalFailureExitsTwo) {
    const Outcome r = run({"train-score", "--data", data("samples.ndtn"), "--out", path("net.ckpt"), "--lr", "1e100",
                       "--train-steps", "5", "--hidden", "4"});
    EXPECT_EQ(r.code, nd::exit_numerical);
    EXPECT_NE(r.err.find("at step"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(path("net.ckpt")));
}

TEST_F(CliTest, InterpolationIsBitwiseReproducible) {
    for (const char* out : {"r1.ndtn", "r2.ndtn"}) {
        auto args = interp_args(out);
        args.insert(args.end(), {"--method", "noisediffusion", "--lambda", "0.5", "--gamma", "0.3162", "--c", "2.0",
                                 "--k", "2.2", "--seed", "7"});
        ASSERT_EQ(run(args).code, 0);
    }
    EXPECT_EQ(slurp(path("r1.ndtn")), slurp(path("r2.ndtn")));
    EXPECT_EQ(slurp(path("r1.ndtn")).size(), 4u + 4 + 4 + 16 + 8 * 64);
}

TEST_F(CliTest, LambdaZeroRecoversImageA) {
    const nd::Tensor a = nd::io::read_image(data("template_square.pgm"));
    for (const char* c : {"2", "1"}) {
        auto args = interp_args("a.ndtn");
        args.insert(args.end(), {"--lambda", "0", "--gamma", "0", "--k", "inf", "--c", c});
        ASSERT_EQ(run(args).code, 0);
        EXPECT_LE(nd::relative_error(nd::io::read_tensor(path("a.ndtn")), a), 1e-2) << "c = " << c;
    }
}

TEST_F(CliTest, EncodeDecodeRoundTrip) {
    ASSERT_EQ(run({"encode", "--mixture", data("mixture.json"), "--input", data("template_plus.pgm"), "--output",
                   path("lat.ndtn")})
                  .code,
              0);
    ASSERT_EQ(run({"decode", "--mixture", data("mixture.json"), "--input", path("lat.ndtn"), "--output",
                   path("dec.ndtn"), "--image", path("dec.pgm")})
                  .code,
              0);
    const nd::Tensor x = nd::io::read_image(data("template_plus.pgm"));
    EXPECT_LE(nd::relative_error(nd::io::read_tensor(path("dec.ndtn")), x), 1e-2);
    EXPECT_EQ(slurp(path("dec.pgm")), slurp(data("template_plus.pgm")));

    const Outcome d = run({"diagnose", "--input", path("lat.ndtn"), "--json", path("diag.json")});
    ASSERT_EQ(d.code, 0);
    const auto j = nlohmann::json::parse(slurp(path("diag.json")));
    EXPECT_EQ(j["n"], 64);
    EXPECT_EQ(j["sigma"].get<double>(), 80.0);
    EXPECT_NE(d.out.find("sphere_radius_ratio"), std::string::npos);
}

TEST_F(CliTest, EmpiricalRuleSuiteRow) {
    const Outcome r = run({"stats", "--suite", "empirical-rule", "--trials", "1000000", "--seed", "3", "--json",
                       path("rule.json"), "--csv", path("rule.csv")});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(slurp(path("rule.csv")), r.out);
    const auto j = nlohmann::json::parse(slurp(path("rule.json")));
    ASSERT_EQ(j.size(), 1u);
    bool found = false;
    for (const auto& c : j[0]["checks"]) {
        if (c["name"] == "within_3sd") {
            found = true;
            EXPECT_NEAR(c["value"].get<double>(), 0.9973, 0.002);
        }
    }
    EXPECT_TRUE(found);
    EXPECT_TRUE(j[0]["passed"].get<bool>());
}

TEST_F(CliTest, ConfigFileFlagsWin) {
    {
        std::ofstream cfg(path("cfg.json"));
        cfg << R"({"lambda": 0.3, "gamma": 0.2, "seed": 11})";
    }
    auto with_cfg = interp_args("cfg_out.ndtn");
    with_cfg.insert(with_cfg.end(), {"--config", path("cfg.json"), "--lambda", "0.8"});
    ASSERT_EQ(run(with_cfg).code, 0);

    auto explicit_args = interp_args("flag_out.ndtn");
    explicit_args.insert(explicit_args.end(), {"--lambda", "0.8", "--gamma", "0.2", "--seed", "11"});
    ASSERT_EQ(run(explicit_args).code, 0);
    EXPECT_EQ(slurp(path("cfg_out.ndtn")), slurp(path("flag_out.ndtn")));

    auto ignored = interp_args("cfg_ignored.ndtn");
    ignored.insert(ignored.end(), {"--lambda", "0.3", "--gamma", "0.2", "--seed", "11"});
    ASSERT_EQ(run(ignored).code, 0);
    EXPECT_NE(slurp(path("cfg_out.ndtn")), slurp(path("cfg_ignored.ndtn")));
}

TEST_F(CliTest, ConfigRejectsUnknownKeysAndBadValues) {
    {
        std::ofstream cfg(path("unknown.json"));
        cfg << R"({"lamda": 0.3})";
    }
    auto args = interp_args("u.ndtn");
    args.insert(args.end(), {"--config", path("unknown.json")});
    Outcome r = run(args);
    EXPECT_EQ(r.code, nd::exit_validation);
    EXPECT_NE(r.err.find("lamda"), std::string::npos) << r.err;

    {
        std::ofstream cfg(path("badval.json"));
        cfg << R"({"method": "teleport"})";
    }
    args = interp_args("u.ndtn");
    args.insert(args.end(), {"--config", path("badval.json")});
    r = run(args);
    EXPECT_EQ(r.code, nd::exit_validation);
    EXPECT_NE(r.err.find("method"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(path("u.ndtn")));
}

TEST_F(CliTest, SeedFallsBackToEnvironment) {
    auto with_flag = interp_args("seed_flag.ndtn");
    with_flag.insert(with_flag.end(), {"--seed", "21"});
    ASSERT_EQ(run(with_flag).code, 0);

    setenv("NOISEDIFF_SEED", "21", 1);
    ASSERT_EQ(run(interp_args("seed_env.ndtn")).code, 0);
    auto overridden = interp_args("seed_override.ndtn");
    overridden.insert(overridden.end(), {"--seed", "22"});
    ASSERT_EQ(run(overridden).code, 0);
    setenv("NOISEDIFF_SEED", "twenty", 1);
    EXPECT_EQ(run(interp_args("seed_bad.ndtn")).code, nd::exit_validation);
    unsetenv("NOISEDIFF_SEED");

    EXPECT_EQ(slurp(path("seed_flag.ndtn")), slurp(path("seed_env.ndtn")));
    EXPECT_NE(slurp(path("seed_flag.ndtn")), slurp(path("seed_override.ndtn")));
}

TEST_F(CliTest, TrainedCheckpointDrivesTheOde) {
    ASSERT_EQ(run({"train-score", "--data", data("samples.ndtn"), "--out", path("small.ckpt"), "--train-steps", "20",
                   "--hidden", "8", "--seed", "2"})
                  .code,
              0);
    const auto params = nd::io::load_checkpoint(path("small.ckpt"));
    EXPECT_EQ(params.data_dim, 64u);
    EXPECT_EQ(params.hidden, 8u);
    EXPECT_EQ(run({"encode", "--checkpoint", path("small.ckpt"), "--input", data("template_square.pgm"), "--output",
                   path("mlp_lat.ndtn"), "--steps", "8"})
                  .code,
              0);
    EXPECT_EQ(run({"encode", "--checkpoint", path("small.ckpt"), "--mixture", data("mixture.json"), "--input",
                   data("template_square.pgm"), "--output", path("both.ndtn")})
                  .code,
              nd::exit_validation);
}
