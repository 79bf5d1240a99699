#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli/bench_runner.hpp"
#include "cli/commands.hpp"
#include "cli/report.hpp"
#include "onexn/bench_harness.hpp"
#include "onexn/error.hpp"
#include "onexn/model_io.hpp"
#include "onexn/pipeline.hpp"
#include "oracles.hpp"

namespace onexn {
namespace {

using testing::TempDir;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ASSERT_EQ(run_cli({"random-model", "--shapes", "64x16x3x3,32x64x1x1", "--seed", "3", "--bias",
                       "--out", (dir / "model").string()})
                  .code,
              0);
    ASSERT_EQ(run_cli({"random-input", "--batch", "1", "--height", "6", "--width", "6",
                       "--channels", "16", "--seed", "4", "--out", (dir / "x.json").string()})
                  .code,
              0);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }

  TempDir dir;
};

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"prune", "--pattern", "1xn"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"report"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST_F(CliTest, PruneReportsHalfTheBlocks) {
  const auto r = run_cli({"prune", "--model", path("model"), "--pattern", "1xn", "--n", "4",
                          "--p", "0.5", "--out", path("pruned")});
  ASSERT_EQ(r.code, 0) << r.err;
  const PruneSummary s = PruneSummary::from_json(slurp(dir / "pruned" / kPruneSummaryName));
  ASSERT_EQ(s.layers.size(), 2u);
  for (const auto& l : s.layers) EXPECT_EQ(l.kept * 2, l.granules) << l.id;
}

TEST_F(CliTest, ZeroRateIsBitIdentical) {
  ASSERT_EQ(run_cli({"prune", "--model", path("model"), "--pattern", "1xn", "--n", "4", "--p", "0",
                     "--out", path("same")})
                .code,
            0);
  for (const char* blob : {"layer0.weights.bin", "layer1.weights.bin", "layer0.bias.bin"}) {
    EXPECT_EQ(slurp(dir / "same" / blob), slurp(dir / "model" / blob)) << blob;
  }
}

TEST_F(CliTest, IndivisibleWidthIsDataError) {
  const auto r = run_cli({"prune", "--model", path("model"), "--pattern", "1xn", "--n", "5",
                          "--p", "0.5", "--out", path("bad")});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("divide"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"prune", "--model", path("model"), "--pattern", "1xn", "--n", "5", "--p",
                     "0.5", "--pad-filters", "--out", path("padded")})
                .code,
            0);
}

TEST_F(CliTest, EncodeInferCheck) {
  ASSERT_EQ(run_cli({"prune", "--model", path("model"), "--pattern", "1xn", "--n", "4", "--p",
                     "0.5", "--rearrange", "--out", path("pruned")})
                .code,
            0);
  const auto enc = run_cli({"encode", "--model", path("pruned"), "--out", path("encoded")});
  ASSERT_EQ(enc.code, 0) << enc.err;
  const std::string storage = slurp(dir / "encoded" / kStorageReportName);
  EXPECT_NE(storage.find("index_ratio"), std::string::npos);
  const EncodedModel loaded = load_encoded(dir / "encoded");
  for (const auto& [id, rep] : loaded.storage) EXPECT_GE(rep.index_ratio(), 2.0) << id;

  const auto inf = run_cli({"infer", "--model", path("encoded"), "--input", path("x.json"),
                            "--executor", "bsr", "--check", "--out", path("y.json")});
  ASSERT_EQ(inf.code, 0) << inf.err;
  const auto pos = inf.out.find("max_relative_error ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LE(std::stod(inf.out.substr(pos + 19)), 1e-5);
  for (const char* exec : {"dense", "csr"}) {
    EXPECT_EQ(run_cli({"infer", "--model", path("pruned"), "--input", path("x.json"), "--executor",
                       exec, "--check", "--out", path(std::string("y_") + exec + ".json")})
                  .code,
              0);
  }
}

TEST_F(CliTest, FullyPrunedEncodesEmptyLayers) {
  ASSERT_EQ(run_cli({"prune", "--model", path("model"), "--pattern", "1xn", "--n", "4", "--p", "1",
                     "--out", path("empty")})
                .code,
            0);
  ASSERT_EQ(run_cli({"encode", "--model", path("empty"), "--out", path("empty_enc")}).code, 0);
  for (const auto& [id, layer] : load_encoded(dir / "empty_enc").layers) {
    EXPECT_EQ(layer.blocks(), 0u) << id;
  }
}

TEST_F(CliTest, EncodeUsesPerLayerWidths) {
  ASSERT_EQ(run_cli({"prune", "--model", path("model"), "--pattern", "1xn", "--n", "4", "--p",
                     "0.5", "--override", "layer1:0.75:8", "--out", path("mixed")})
                .code,
            0);
  ASSERT_EQ(run_cli({"encode", "--model", path("mixed"), "--out", path("mixed_enc")}).code, 0);
  const EncodedModel enc = load_encoded(dir / "mixed_enc");
  EXPECT_EQ(enc.layers.at("layer0").block_width(), 4u);
  EXPECT_EQ(enc.layers.at("layer1").block_width(), 8u);
  EXPECT_EQ(enc.layers.at("layer1").blocks(), 64u * 32u / 8u / 4u);
  EXPECT_EQ(run_cli({"infer", "--model", path("mixed_enc"), "--input", path("x.json"),
                     "--executor", "bsr", "--check", "--out", path("y.json")})
                .code,
            0);
}

TEST_F(CliTest, EncodeRejectsWeightPruned) {
  ASSERT_EQ(run_cli({"prune", "--model", path("model"), "--pattern", "weight", "--p", "0.5",
                     "--out", path("wp")})
                .code,
            0);
  const auto r = run_cli({"encode", "--model", path("wp"), "--out", path("wp_enc")});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("not block-sparse"), std::string::npos) << r.err;
  // Without a prune summary the strict occupancy check applies.
  std::filesystem::remove(dir / "wp" / kPruneSummaryName);
  EXPECT_EQ(run_cli({"encode", "--model", path("wp"), "--n", "4", "--out", path("wp_enc")}).code,
            cli::kExitData);
}

TEST_F(CliTest, BsrNeedsEncodedModel) {
  const auto r = run_cli({"infer", "--model", path("model"), "--input", path("x.json"),
                          "--executor", "bsr", "--out", path("y.json")});
  EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST_F(CliTest, ZeroInputGivesBias) {
  ASSERT_EQ(run_cli({"random-input", "--channels", "16", "--batch", "3", "--zero", "--out",
                     path("zero.json")})
                .code,
            0);
  std::vector<TensorShape> shapes{{8, 16, 1, 1}};
  save_model(random_model(shapes, 5, {.with_bias = true}), dir / "fc");
  ASSERT_EQ(run_cli({"infer", "--model", path("fc"), "--input", path("zero.json"), "--out",
                     path("zy.json")})
                .code,
            0);
  const Activation y = load_activation(dir / "zy.json");
  const auto bias = *load_model(dir / "fc")[0].bias;
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(std::vector<float>(y.row(r).begin(), y.row(r).end()), bias);
  }
}

TEST_F(CliTest, MissingInputIsDataError) {
  EXPECT_EQ(run_cli({"infer", "--model", path("model"), "--input", path("nope.json"), "--out",
                     path("y.json")})
                .code,
            cli::kExitData);
}

TEST_F(CliTest, SeededCommandsAreReproducible) {
  ASSERT_EQ(run_cli({"random-model", "--shapes", "64x16x3x3,32x64x1x1", "--seed", "3", "--bias",
                     "--out", path("again")})
                .code,
            0);
  for (const auto& entry : std::filesystem::directory_iterator(dir / "model")) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "again" / entry.path().filename()));
  }
  for (const char* out : {"p1", "p2"}) {
    ASSERT_EQ(run_cli({"prune", "--model", path("model"), "--pattern", "1xn", "--n", "8", "--p",
                       "0.75", "--rearrange", "--out", path(out)})
                  .code,
              0);
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir / "p1")) {
    EXPECT_EQ(slurp(entry.path()), slurp(dir / "p2" / entry.path().filename()));
  }
}

TEST_F(CliTest, ReportMergesAndSortsBenchFiles) {
  const std::string header = cli::kBenchCsvHeader;
  std::ofstream(dir / "b.csv") << header << "\n"
                               << "64x64x64,1xn,4,0.75,bsr,1,10,9,11,2\n"
                               << "32x32x32,1xn,4,0.5,dense,1,10,9,11,1\n";
  std::ofstream(dir / "a.csv") << header << "\n"
                               << "64x64x64,1xn,4,0.5,bsr,1,20,19,21,1\n";
  const auto r = run_cli({"report", path("a.csv"), path("b.csv"), "--out", path("rep")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string merged = slurp(dir / "rep" / "bench_merged.csv");
  EXPECT_EQ(merged, header + "\n" + "32x32x32,1xn,4,0.5,dense,1,10,9,11,1.0000\n" +
                        "64x64x64,1xn,4,0.5,bsr,1,20,19,21,1.0000\n" +
                        "64x64x64,1xn,4,0.75,bsr,1,10,9,11,2.0000\n");
  EXPECT_TRUE(std::filesystem::exists(dir / "rep" / "latency_vs_p.svg"));
  std::ofstream(dir / "broken.csv") << "not,a,bench\n1,2,3\n";
  EXPECT_EQ(run_cli({"report", path("broken.csv"), "--out", path("rep2")}).code, cli::kExitData);
}

TEST_F(CliTest, ReportHistogramPair) {
  for (const auto& [flag, out] : {std::pair{"", "plain"}, std::pair{"--rearrange", "sorted"}}) {
    std::vector<std::string> args{"prune", "--model", path("model"), "--pattern", "1xn", "--n",
                                  "4", "--p", "0.5", "--out", path(out)};
    if (*flag) args.emplace_back(flag);
    ASSERT_EQ(run_cli(args).code, 0);
  }
  const auto r = run_cli({"report", (dir / "plain" / kPruneSummaryName).string(),
                          (dir / "sorted" / kPruneSummaryName).string(), "--out", path("rep")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::vector<PruneSummary> summaries{
      PruneSummary::from_json(slurp(dir / "plain" / kPruneSummaryName)),
      PruneSummary::from_json(slurp(dir / "sorted" / kPruneSummaryName))};
  const cli::HistogramPair pair = cli::collect_histograms(summaries);
  EXPECT_EQ(pair.summaries_with, 1u);
  EXPECT_EQ(pair.summaries_without, 1u);
  EXPECT_EQ(slurp(dir / "rep" / "retained_magnitude.csv"), cli::histogram_csv(pair));
  EXPECT_TRUE(std::filesystem::exists(dir / "rep" / "retained_magnitude.svg"));
}

TEST_F(CliTest, BenchWritesCsvAndJson) {
  const auto r = run_cli({"bench", "--shapes", "8x64x64", "--patterns", "1xn,weight,filter", "--n",
                          "4", "--p", "0,0.5", "--iters", "3", "--warmup", "1", "--quiet", "--csv",
                          path("b.csv"), "--json", path("b.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "b.csv");
  EXPECT_EQ(csv.rfind(std::string(cli::kBenchCsvHeader) + "\n", 0), 0u);
  EXPECT_EQ(csv, r.out);
  // 1xn: dense, csr, bsr; weight: dense, csr; filter: dense, csr, compact; two rates each.
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), 1u + 2u * 8u);
  EXPECT_EQ(cli::read_bench_rows(dir / "b.json").size(), 16u);
  EXPECT_EQ(run_cli({"bench", "--shapes", "8x64", "--p", "0.5", "--quiet"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"bench", "--shapes", "8x64x64", "--p", "1.5", "--quiet"}).code,
            cli::kExitUsage);
}

TEST(BenchShape, Parses) {
  const auto g = cli::BenchShape::parse("16x128x256");
  EXPECT_EQ(g.rows, 16u);
  EXPECT_EQ(g.in_channels, 128u);
  EXPECT_EQ(g.out_channels, 256u);
  EXPECT_FALSE(g.is_conv());
  const auto c = cli::BenchShape::parse("14x14x32x64x3");
  EXPECT_TRUE(c.is_conv());
  EXPECT_EQ(c.kernel, 3u);
  EXPECT_THROW(cli::BenchShape::parse("4x0x4"), Error);
}

TEST(BenchGrid, DenseAgainstItselfIsNeutral) {
  cli::BenchGrid grid;
  grid.shapes = {cli::BenchShape::parse("64x256x256")};
  grid.patterns = {PatternKind::kBlock1xN};
  grid.block_widths = {4};
  grid.rates = {0.0};
  grid.executors = {"dense", "bsr"};
  grid.iters = 61;
  grid.warmup = 5;
  // Timing on a shared host is noisy: accept the first of three attempts that
  // lands in the band.
  bool neutral = false;
  bool no_free_lunch = false;
  for (int attempt = 0; attempt < 3 && !(neutral && no_free_lunch); ++attempt) {
    const auto rows = cli::run_bench_grid(grid);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
      EXPECT_EQ(r.wall_times_ns.size(), 61u);
      if (r.config.executor == "dense") {
        neutral = neutral || (r.speedup_vs_dense >= 0.9 && r.speedup_vs_dense <= 1.1);
      } else {
        no_free_lunch = no_free_lunch || r.speedup_vs_dense <= 1.2;
      }
    }
  }
  EXPECT_TRUE(neutral);
  EXPECT_TRUE(no_free_lunch);
}

TEST(BenchHarness, Summaries) {
  const std::vector<double> odd{5, 1, 3, 2, 4};
  const BenchStats a = summarize(odd);
  EXPECT_EQ(a.median_ns, 3);
  EXPECT_EQ(a.p10_ns, 1);
  EXPECT_EQ(a.p90_ns, 5);
  const std::vector<double> even{4, 1, 3, 2};
  EXPECT_EQ(summarize(even).median_ns, 2.5);
  EXPECT_THROW(summarize(std::vector<double>{}), Error);

  int calls = 0;
  const auto samples = time_iterations([&] { ++calls; }, 2, 7);
  EXPECT_EQ(samples.size(), 7u);
  EXPECT_EQ(calls, 9);
}

}  // namespace
}  // namespace onexn
