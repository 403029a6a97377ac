#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "json.hpp"
#include "riskforge/cli.hpp"
#include "riskforge/dsl.hpp"

namespace fs = std::filesystem;
using riskforge::cli::execute;
using Json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = execute(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("rf_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  fs::path dir_;
};

const char* kModel = R"(
ftree TOP and { event A p=0.1 or { event B p=0.1 event C p=0.1 } }
etree CONS branch BARRIER p=0.9 {
  outcome SAFE severity=0 fatalities
  outcome HARM severity=10 fatalities
}
bowtie BT event CE causes TOP consequences CONS
dsa D1 scenario TOP { override A p=1 criterion top <= 0.5 }
)";

std::string fixture(const std::string& name) { return (fs::path(RF_FIXTURES) / name).string(); }

}  // namespace

TEST_F(Cli, ValidateGood) {
  const auto r = run({"validate", write("good.rsk", kModel)});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.err.empty());
  EXPECT_EQ(Json::parse(r.out)["findings"], Json::array());
}

TEST_F(Cli, ValidateErrorsExitOne) {
  const auto r = run({"validate", write("bad.rsk", "ftree T or { event A p=1.5 }")});
  EXPECT_EQ(r.code, 1);
  const auto j = Json::parse(r.out);
  EXPECT_FALSE(j["valid"].get<bool>());
  EXPECT_EQ(j["findings"][0]["code"], "probability-range");
}

TEST_F(Cli, MinimalCutSets) {
  const auto r = run({"mcs", write("m.rsk", kModel), "--tree", "TOP"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "[[\"A\",\"B\"],[\"A\",\"C\"]]\n");
}

TEST_F(Cli, ParseErrorIsInputError) {
  const auto path = write("broken.rsk", "hazard H \"x\"\nftree T or { event A q=1 }\n");
  const auto r = run({"mcs", path, "--tree", "T"});
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("broken.rsk:2:"), std::string::npos);
}

TEST_F(Cli, MissingFileIsInputError) {
  const auto r = run({"fmeca", (dir_ / "nope.rsk").string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"mcs", write("m.rsk", kModel)}).code, 2);  // --tree missing
  const auto r = run({"quantify", write("m2.rsk", kModel), "--target", "TOP", "--n", "0"});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, HelpExitsZero) {
  const auto r = run({"mcs", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--tree"), std::string::npos);
}

TEST_F(Cli, LimitExceeded) {
  std::string text = "ftree BIG or {";
  for (int i = 0; i < 70; ++i) text += " event E" + std::to_string(i) + " p=0.01";
  text += " }";
  const auto r = run({"mcs", write("big.rsk", text), "--tree", "BIG"});
  EXPECT_EQ(r.code, 4);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("limit 64"), std::string::npos);
}

TEST_F(Cli, QuantifyReproducibleAndEchoesSeed) {
  const auto path = write("m.rsk", "ftree T and { event A ~beta(2, 8) event B ~beta(2, 8) }");
  const auto a = run({"quantify", path, "--target", "T", "--n", "2000", "--seed", "7"});
  const auto b = run({"quantify", path, "--target", "T", "--n", "2000", "--seed", "7", "--threads", "3"});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_TRUE(a.err.empty());
  const auto j = Json::parse(a.out);
  EXPECT_EQ(j["seed"], 7);
  EXPECT_NEAR(j["point"]["exact"].get<double>(), 0.04, 1e-15);
  const auto d = Json::parse(run({"quantify", path, "--target", "T", "--n", "10"}).out);
  EXPECT_EQ(d["seed"], 42);
}

TEST_F(Cli, SequencesAndBowtie) {
  const auto path = write("m.rsk", kModel);
  auto r = run({"bowtie", path, "--id", "BT"});
  ASSERT_EQ(r.code, 0);
  auto j = Json::parse(r.out);
  EXPECT_NEAR(j["top_probability"].get<double>(), 0.019, 1e-15);
  EXPECT_EQ(run({"sequences", path, "--etree", "CONS"}).code, 3);  // initiator comes from the bow-tie only
}

TEST_F(Cli, Infer) {
  const auto path = write("bn.rsk", "bnet BN { node A states (t, f) cpt { () 0.5 0.5 } "
                                    "node B states (t, f) parents (A) cpt { (t) 0.8 0.2 (f) 0.2 0.8 } }");
  const auto r = run({"infer", path, "--bnet", "BN", "--query", "A", "--evidence", "B=t"});
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(Json::parse(r.out)["distribution"]["t"].get<double>(), 0.8, 1e-15);
  EXPECT_EQ(run({"infer", path, "--bnet", "BN", "--query", "A", "--evidence", "B"}).code, 2);
}

TEST_F(Cli, FmecaRanking) {
  const auto r = run({"fmeca", write("f.rsk", "fmeca W { mode LOW S=5 O=3 D=4 mode HIGH S=9 O=3 D=7 }")});
  ASSERT_EQ(r.code, 0);
  const auto j = Json::parse(r.out);
  EXPECT_EQ(j["worksheets"][0]["modes"][0]["id"], "HIGH");
  EXPECT_EQ(j["worksheets"][0]["modes"][0]["rpn"], 189);
}

TEST_F(Cli, MatrixWithBandOverride) {
  auto r = run({"matrix", "--likelihood", "3e-4", "--severity", "10", "--unit", "fatalities"});
  ASSERT_EQ(r.code, 0);
  auto j = Json::parse(r.out);
  EXPECT_EQ(j["ll"], "LL-5");
  EXPECT_EQ(j["hsl"], "HSL-3");
  const auto bands = write("bands.json", R"({"severity": {"fatalities": [0, 20, 200, 2000, 20000, 200000]}})");
  r = run({"matrix", "--likelihood", "3e-4", "--severity", "10", "--unit", "fatalities", "--bands", bands});
  EXPECT_EQ(Json::parse(r.out)["hsl"], "HSL-1");
  EXPECT_EQ(run({"matrix", "--likelihood", "3e-4", "--severity", "10", "--unit", "dollars"}).code, 2);
}

TEST_F(Cli, CurvesWritesCsv) {
  const auto csv = (dir_ / "curve.csv").string();
  const auto r = run({"curves", fixture("ai_misuse_bowtie.rsk"), "--target", "MISUSE", "--out", csv, "--n", "500"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "severity,exceedance");
}

TEST_F(Cli, EvaluateExceededExitsOne) {
  const auto r = run({"evaluate", fixture("ai_misuse_bowtie.rsk"), "--tolerance", fixture("ai_misuse_tolerance_tight.rsk")});
  EXPECT_EQ(r.code, 1);
  const auto j = Json::parse(r.out);
  EXPECT_EQ(j["tolerance"]["result"], "exceeded");
  EXPECT_EQ(j["tolerance"]["violations"][0]["severity"], 1000.0);
}

TEST_F(Cli, EvaluateAcceptable) {
  const auto r = run({"evaluate", fixture("ai_misuse_bowtie.rsk"), "--tolerance", fixture("ai_misuse_tolerance.rsk")});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.err.empty());
  EXPECT_EQ(Json::parse(r.out)["verdict"], "satisfied");
}

TEST_F(Cli, UpdateWritesNewVersion) {
  const auto src = write("m.rsk", "ftree T or { event A ~beta(2, 8) event B p=0.1 }");
  const auto dst = (dir_ / "m2.rsk").string();
  const auto r = run({"update", src, "--quantity", "T/A", "--successes", "3", "--trials", "10", "--out", dst});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = riskforge::dsl::parse_file(dst);
  EXPECT_EQ(m.fault_trees[0].events[0].quantity->params()[0], 5.0);
  EXPECT_EQ(run({"update", src, "--quantity", "T/A", "--successes", "11", "--trials", "10", "--out", dst}).code, 3);
}
