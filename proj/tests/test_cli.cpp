// Copyright 2026 The detdiag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <sstream>

#include "detdiag/cli.hpp"
#include "support.hpp"

namespace detdiag {
namespace {

struct Result {
  int code;
  std::string out, err;
};

Result Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "detdiag_cli");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new std::filesystem::path(testing_support::temp_dir("cli"));
    ErrorBudget b = random_budget(5, 8, 4, 120);
    b[ErrorKind::Bkg] = std::max<std::size_t>(b[ErrorKind::Bkg], 3);
    b[ErrorKind::Cls] = std::max<std::size_t>(b[ErrorKind::Cls], 3);
    b.true_positives = std::max<std::size_t>(b.true_positives, 10);
    b.classes = std::max<std::size_t>(b.classes, 2);
    b.calibration = Calibration::Uniform;
    save_synthetic(generate(b), Path("gt.json"), Path("a.json"));
  }
  static void TearDownTestSuite() { delete dir_; }
  static std::string Path(const std::string& name) { return (*dir_ / name).string(); }

  static std::filesystem::path* dir_;
};

std::filesystem::path* CliTest::dir_ = nullptr;

TEST_F(CliTest, EvalPrintsTextSummary) {
  const Result r = Cli({"eval", "--gt", Path("gt.json"), "--dets", Path("a.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("main errors"), std::string::npos);
  EXPECT_NE(r.out.find("model:   a"), std::string::npos);
}

TEST_F(CliTest, MissingFileIsAnInputError) {
  const Result r = Cli({"eval", "--gt", Path("nope.json"), "--dets", Path("a.json")});
  EXPECT_EQ(r.code, cli::kExitInput);
  EXPECT_NE(r.err.find("nope.json"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitWithInputCode) {
  EXPECT_EQ(Cli({"eval", "--bogus"}).code, cli::kExitInput);
  EXPECT_EQ(Cli({}).code, cli::kExitInput);
  EXPECT_EQ(Cli({"eval", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--box", "--mask"}).code,
            cli::kExitInput);
  EXPECT_EQ(Cli({"eval", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--mode", "box", "--mask"}).code,
            cli::kExitInput);
  EXPECT_EQ(Cli({"eval", "--gt", Path("gt.json")}).code, cli::kExitInput);
  EXPECT_EQ(Cli({"eval", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--tb", "0.7"}).code,
            cli::kExitInput);
}

TEST_F(CliTest, HelpExitsCleanly) {
  const Result r = Cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("eval"), std::string::npos);
}

TEST_F(CliTest, ThreadCountDoesNotChangeStructuredOutput) {
  const std::vector<std::string> base = {"eval", "--gt", Path("gt.json"), "--dets", Path("a.json"),
                                         "--format", "structured", "--scale", "--top-k", "3",
                                         "--missed-oracle", "score_sampled", "--seed", "11",
                                         "--progressive", "cls,loc,both,dupe,bkg,miss"};
  auto one = base, eight = base;
  one.insert(one.end(), {"--threads", "1"});
  eight.insert(eight.end(), {"--threads", "8"});
  const Result a = Cli(one), b = Cli(eight);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, ProgressiveOrderMatters) {
  auto bkg_at = [&](const std::string& order) {
    const Result r = Cli({"eval", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--format",
                          "structured", "--progressive", order});
    EXPECT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    const auto& names = j["progressive"]["order"];
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == "bkg") return j["progressive"]["delta"][i].get<double>();
    return -1.0;
  };
  const double first = bkg_at("bkg,cls,loc,both,dupe,miss");
  const double last = bkg_at("cls,loc,both,dupe,miss,bkg");
  EXPECT_NE(first, last);
  EXPECT_EQ(Cli({"eval", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--progressive", "bkg,bkg"}).code,
            cli::kExitInput);
}

TEST_F(CliTest, OutputFileAndSvg) {
  const std::string svg = Path("a.svg");
  ASSERT_EQ(Cli({"eval", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--format", "svg", "--out", svg}).code, 0);
  EXPECT_EQ(read_file(svg).rfind("<?xml", 0), 0u);
}

TEST_F(CliTest, SweepAndScaleAndTopErrors) {
  Result r = Cli({"sweep", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--tf-list", "0.5,0.7,0.9"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("threshold sweep"), std::string::npos);
  EXPECT_NE(r.out.find("0.90"), std::string::npos);

  r = Cli({"sweep", "--gt", Path("gt.json"), "--dets", Path("a.json")});
  EXPECT_EQ(r.code, cli::kExitInput);

  r = Cli({"scale", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--kinds", "bkg,miss"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("dAP by object scale"), std::string::npos);

  r = Cli({"toperrors", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--kind", "bkg", "--k", "2",
           "--format", "structured"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  ASSERT_EQ(j["top_errors"].size(), 2u);
  for (const auto& e : j["top_errors"]) EXPECT_EQ(e["kind"], "bkg");
  EXPECT_GE(j["top_errors"][0]["score"].get<double>(), j["top_errors"][1]["score"].get<double>());
}

TEST_F(CliTest, CompareNamesModelsAndMergesReports) {
  const std::string saved = Path("a_report.json");
  ASSERT_EQ(Cli({"eval", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--name", "first",
                 "--format", "structured", "--out", saved})
                .code,
            0);
  const Result r = Cli({"compare", "--gt", Path("gt.json"), "--dets", "second=" + Path("a.json"),
                        "--merge", saved, "--format", "structured"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  ASSERT_EQ(j["models"].size(), 2u);
  EXPECT_EQ(j["models"][0]["meta"]["model"], "first");
  EXPECT_EQ(j["models"][1]["meta"]["model"], "second");
  EXPECT_EQ(j["models"][0]["errors"], j["models"][1]["errors"]);

  const Result text = Cli({"compare", "--merge", saved});
  ASSERT_EQ(text.code, 0) << text.err;
  EXPECT_NE(text.out.find("first"), std::string::npos);
  EXPECT_EQ(Cli({"compare", "--merge", saved, "--format", "svg"}).code, cli::kExitInput);
  EXPECT_EQ(Cli({"compare"}).code, cli::kExitInput);
}

TEST_F(CliTest, MaskModeRejectsBoxOnlyDetections) {
  const Result r = Cli({"eval", "--gt", Path("gt.json"), "--dets", Path("a.json"), "--mask"});
  // Box-only detections cannot be evaluated as masks.
  EXPECT_EQ(r.code, cli::kExitInput);
}

TEST(CliSelftest, PassesOnGeneratedData) {
  const Result r = Cli({"selftest", "--trials", "20", "--seed", "3"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("PASS selftest", 0), 0u) << r.out;
}

}  // namespace
}  // namespace detdiag
