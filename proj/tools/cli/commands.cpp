#include "cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "cli/bench_runner.hpp"
#include "cli/report.hpp"
#include "onexn/activation.hpp"
#include "onexn/error.hpp"
#include "onexn/exec.hpp"
#include "onexn/model_io.hpp"
#include "onexn/pipeline.hpp"

namespace onexn::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v, const char* f) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

TensorShape parse_tensor_shape(const std::string& token) {
  std::vector<std::size_t> dims;
  std::stringstream ss(token);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      fail(ErrorCode::kUsage, "bad layer shape '" + token + "' (expected NxMxHxW)");
    }
    dims.push_back(std::stoul(part));
  }
  if (dims.size() != 4) fail(ErrorCode::kUsage, "bad layer shape '" + token + "' (expected NxMxHxW)");
  const TensorShape s{dims[0], dims[1], dims[2], dims[3]};
  if (!s.valid()) fail(ErrorCode::kUsage, "layer shape '" + token + "' has a zero dimension");
  return s;
}

// "--override id:p" or "--override id:p:N".
void parse_override(const std::string& text, PruneConfig& config) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() < 2 || parts.size() > 3 || parts[0].empty()) {
    fail(ErrorCode::kUsage, "bad --override '" + text + "' (expected id:p[:N])");
  }
  LayerOverride o;
  try {
    o.rate = std::stod(parts[1]);
    if (parts.size() == 3) o.block_width = std::stoul(parts[2]);
  } catch (const std::exception&) {
    fail(ErrorCode::kUsage, "bad --override '" + text + "'");
  }
  if (!(*o.rate >= 0.0 && *o.rate <= 1.0)) fail(ErrorCode::kUsage, "override rate outside [0, 1]");
  if (o.block_width && *o.block_width == 0) fail(ErrorCode::kUsage, "override N must be >= 1");
  config.overrides[parts[0]] = o;
}

struct PruneArgs {
  std::string model, pattern = "1xn", out;
  std::size_t n = 4;
  double p = 0.5;
  bool rearrange = false, pad = false;
  std::vector<std::string> overrides;
};

int cmd_prune(const PruneArgs& a, std::ostream& out) {
  PruneConfig config;
  config.pattern = parse_pattern(a.pattern);
  config.block_width = a.n;
  config.rate = a.p;
  config.pad_filters = a.pad;
  for (const auto& o : a.overrides) parse_override(o, config);

  const ModelGraph model = load_model(a.model);
  const PruneOutcome outcome = prune_model(model, config, a.rearrange);
  save_model(outcome.model, a.out);
  write_text(fs::path(a.out) / kPruneSummaryName, outcome.summary.to_json());

  for (const auto& l : outcome.summary.layers) {
    out << l.id << ": ";
    if (l.pruned) {
      out << "kept " << l.kept << "/" << l.granules << " granules, retained l1 "
          << fmt(l.retained_l1, "%.6g") << "/" << fmt(l.total_l1, "%.6g") << "\n";
    } else {
      out << "skipped (" << l.skip_reason << ")\n";
    }
  }
  return kExitOk;
}

struct EncodeArgs {
  std::string model, out;
  std::size_t n = 0;
};

int cmd_encode(const EncodeArgs& a, std::ostream& out) {
  const fs::path dir(a.model);
  const ModelGraph model = load_model(dir);
  std::size_t width = a.n;
  bool strict = true;
  std::map<std::string, std::size_t> layer_widths;
  if (fs::exists(dir / kPruneSummaryName)) {
    const PruneSummary summary = PruneSummary::from_json(read_text(dir / kPruneSummaryName));
    if (summary.pattern != PatternKind::kBlock1xN) {
      fail(ErrorCode::kNotBlockSparse, "model is not block-sparse (pruned with pattern '" +
                                           std::string(to_string(summary.pattern)) + "')");
    }
    if (width != 0 && width != summary.block_width) {
      fail(ErrorCode::kUsage, "--n " + std::to_string(width) + " disagrees with the pruned N = " +
                                  std::to_string(summary.block_width));
    }
    width = summary.block_width;
    strict = false;
    for (const auto& l : summary.layers) {
      if (l.pruned && l.block_width != 0) layer_widths[l.id] = l.block_width;
    }
  }
  if (width == 0) fail(ErrorCode::kUsage, "--n is required when the model has no prune summary");

  const EncodedModel encoded = encode_model(model, width, strict, layer_widths);
  save_encoded(encoded, a.out);
  for (const auto& layer : model.layers()) {
    auto it = encoded.storage.find(layer.id);
    if (it == encoded.storage.end()) {
      out << layer.id << ": skipped (" << encoded.skipped.at(layer.id) << ")\n";
      continue;
    }
    const StorageReport& r = it->second;
    out << layer.id << ": t=" << encoded.layers.at(layer.id).blocks() << " bsr_indices="
        << r.bsr_index_count << " csr_indices=" << r.csr_index_count << " ratio="
        << fmt(r.index_ratio(), "%.3f") << "\n";
  }
  return kExitOk;
}

struct InferArgs {
  std::string model, input, executor = "dense", out;
  bool check = false;
  unsigned threads = 1;
  double tolerance = 1e-5;
};

int cmd_infer(const InferArgs& a, std::ostream& out, std::ostream& err) {
  const Executor executor = parse_executor(a.executor);
  const fs::path dir(a.model);
  const ExecOptions opts{a.threads};
  const Activation x = load_activation(a.input);

  Activation y;
  ModelGraph model;
  if (executor == Executor::kBsr) {
    if (!has_encoding(dir)) {
      fail(ErrorCode::kUsage, "executor bsr needs an encoded model directory (run `onexn encode`)");
    }
    EncodedModel encoded = load_encoded(dir);
    model = encoded.model;
    y = ModelPlan(model, std::move(encoded.layers)).forward(x, opts);
  } else {
    model = load_model(dir);
    y = ModelPlan(model, executor).forward(x, opts);
  }
  save_activation(y, a.out);
  const auto& s = y.shape();
  out << "wrote " << a.out << " (" << s.batch << "x" << s.height << "x" << s.width << "x"
      << s.channels << ")\n";

  if (a.check) {
    const Activation ref = ModelPlan(model, Executor::kDense).forward(x, opts);
    const double error = max_relative_error(y.data(), ref.data());
    out << "max_relative_error " << fmt(error, "%.3e") << "\n";
    if (error > a.tolerance) {
      err << "check failed: error exceeds " << fmt(a.tolerance, "%g") << "\n";
      return kExitData;
    }
  }
  return kExitOk;
}

struct BenchArgs {
  std::vector<std::string> shapes, patterns{"1xn"}, executors{"dense", "csr", "bsr", "compact"};
  std::vector<std::size_t> widths{4};
  std::vector<double> rates;
  std::size_t warmup = 1, iters = 5;
  unsigned threads = 1;
  std::uint64_t seed = 1;
  std::string csv, json;
  bool quiet = false;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  BenchGrid grid;
  for (const auto& s : a.shapes) grid.shapes.push_back(BenchShape::parse(s));
  for (const auto& p : a.patterns) grid.patterns.push_back(parse_pattern(p));
  grid.block_widths = a.widths;
  grid.rates = a.rates;
  grid.executors = a.executors;
  grid.warmup = a.warmup;
  grid.iters = a.iters;
  grid.threads = a.threads;
  grid.seed = a.seed;
  if (grid.threads == 0) fail(ErrorCode::kUsage, "--threads must be >= 1");

  const auto rows = run_bench_grid(grid, [&](const BenchResult& r) {
    if (a.quiet) return;
    err << r.config.shape << " " << to_string(r.config.pattern) << " N=" << r.config.block_width
        << " p=" << fmt(r.config.rate, "%g") << " " << r.config.executor << ": "
        << fmt(r.stats.median_ns / 1e6, "%.3f") << " ms\n";
  });
  const std::string csv = bench_csv(rows);
  out << csv;
  if (!a.csv.empty()) write_text(a.csv, csv);
  if (!a.json.empty()) write_text(a.json, bench_json(rows, grid));
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir,
               std::ostream& out) {
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  for (const auto& written : generate_report(paths, out_dir)) out << "wrote " << written.string() << "\n";
  return kExitOk;
}

struct RandomModelArgs {
  std::vector<std::string> shapes;
  std::uint64_t seed = 1;
  std::string out, name = "random";
  bool bias = false;
};

int cmd_random_model(const RandomModelArgs& a, std::ostream& out) {
  std::vector<TensorShape> shapes;
  for (const auto& s : a.shapes) shapes.push_back(parse_tensor_shape(s));
  const ModelGraph model = random_model(shapes, a.seed, {a.bias, a.name});
  save_model(model, a.out);
  out << "wrote " << model.size() << " layers to " << a.out << "\n";
  return kExitOk;
}

struct RandomInputArgs {
  std::size_t batch = 1, height = 1, width = 1, channels = 0;
  std::uint64_t seed = 1;
  std::string out;
  bool zero = false;
};

int cmd_random_input(const RandomInputArgs& a, std::ostream& out) {
  const ActivationShape shape{a.batch, a.height, a.width, a.channels};
  std::vector<float> data(shape.elements(), 0.0f);
  if (!a.zero) fill_uniform(data, a.seed);
  save_activation(Activation(shape, std::move(data)), a.out);
  out << "wrote " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"1xN block pruning, BSR encoding and sparse inference toolkit", "onexn"};
  app.require_subcommand(1);

  PruneArgs prune;
  auto* prune_cmd = app.add_subcommand("prune", "Prune a model with a weight, filter or 1xN pattern");
  prune_cmd->add_option("--model", prune.model, "Model directory or manifest")->required();
  prune_cmd->add_option("--pattern", prune.pattern, "weight | filter | 1xn")
      ->check(CLI::IsMember({"weight", "filter", "1xn"}));
  prune_cmd->add_option("--n", prune.n, "Block width N")->check(CLI::PositiveNumber);
  prune_cmd->add_option("--p", prune.p, "Pruning rate")->required()->check(CLI::Range(0.0, 1.0));
  prune_cmd->add_flag("--rearrange", prune.rearrange, "Rearrange filters before selecting masks");
  prune_cmd->add_flag("--pad-filters", prune.pad, "Allow N not dividing the filter count");
  prune_cmd->add_option("--override", prune.overrides, "Per-layer id:p[:N]");
  prune_cmd->add_option("--out", prune.out, "Output directory")->required();

  EncodeArgs encode;
  auto* encode_cmd = app.add_subcommand("encode", "Encode a 1xN-pruned model into .bsr files");
  encode_cmd->add_option("--model", encode.model, "Pruned model directory")->required();
  encode_cmd->add_option("--n", encode.n, "Block width (read from prune_summary.json if present)");
  encode_cmd->add_option("--out", encode.out, "Output directory")->required();

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Run a chain model on an activation");
  infer_cmd->add_option("--model", infer.model, "Model or encoded model directory")->required();
  infer_cmd->add_option("--input", infer.input, "Activation sidecar JSON")->required();
  infer_cmd->add_option("--executor", infer.executor, "dense | csr | bsr")
      ->check(CLI::IsMember({"dense", "csr", "bsr"}));
  infer_cmd->add_option("--out", infer.out, "Output sidecar JSON")->required();
  infer_cmd->add_flag("--check", infer.check, "Compare against the dense executor");
  infer_cmd->add_option("--tolerance", infer.tolerance, "Max relative error accepted by --check");
  infer_cmd->add_option("--threads", infer.threads, "Worker threads (0 = all cores)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time executors over a pruning grid");
  bench_cmd->add_option("--shapes", bench.shapes, "RxMxC (GEMM) or HxWxMxCxK (conv)")
      ->required()->delimiter(',');
  bench_cmd->add_option("--patterns", bench.patterns, "weight,filter,1xn")->delimiter(',')
      ->check(CLI::IsMember({"weight", "filter", "1xn"}));
  bench_cmd->add_option("--n", bench.widths, "Block widths")->delimiter(',');
  bench_cmd->add_option("--p", bench.rates, "Pruning rates")->required()->delimiter(',');
  bench_cmd->add_option("--executors", bench.executors, "dense,csr,bsr,compact")->delimiter(',');
  bench_cmd->add_option("--warmup", bench.warmup, "Untimed iterations");
  bench_cmd->add_option("--iters", bench.iters, "Timed iterations");
  bench_cmd->add_option("--threads", bench.threads, "Executor threads");
  bench_cmd->add_option("--seed", bench.seed, "Data seed");
  bench_cmd->add_option("--csv", bench.csv, "Write CSV table here");
  bench_cmd->add_option("--json", bench.json, "Write JSON (with raw samples) here");
  bench_cmd->add_flag("--quiet", bench.quiet, "No progress on stderr");

  std::vector<std::string> report_inputs;
  std::string report_out = "report";
  auto* report_cmd = app.add_subcommand("report", "Merge bench/prune outputs into tables and SVG plots");
  report_cmd->add_option("inputs", report_inputs, "Bench CSV/JSON and prune_summary.json files");
  report_cmd->add_option("--out", report_out, "Output directory");

  RandomModelArgs rmodel;
  auto* rmodel_cmd = app.add_subcommand("random-model", "Write a random chain model");
  rmodel_cmd->add_option("--shapes", rmodel.shapes, "Layer shapes NxMxHxW")->required()->delimiter(',');
  rmodel_cmd->add_option("--seed", rmodel.seed, "Seed");
  rmodel_cmd->add_option("--name", rmodel.name, "Model name");
  rmodel_cmd->add_flag("--bias", rmodel.bias, "Give every layer a random bias");
  rmodel_cmd->add_option("--out", rmodel.out, "Output directory")->required();

  RandomInputArgs rinput;
  auto* rinput_cmd = app.add_subcommand("random-input", "Write a random activation");
  rinput_cmd->add_option("--batch", rinput.batch, "Batch (rows for fc models)");
  rinput_cmd->add_option("--height", rinput.height, "Height");
  rinput_cmd->add_option("--width", rinput.width, "Width");
  rinput_cmd->add_option("--channels", rinput.channels, "Channels")->required();
  rinput_cmd->add_option("--seed", rinput.seed, "Seed");
  rinput_cmd->add_flag("--zero", rinput.zero, "All-zero activation");
  rinput_cmd->add_option("--out", rinput.out, "Output sidecar JSON")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*prune_cmd) return cmd_prune(prune, out);
    if (*encode_cmd) return cmd_encode(encode, out);
    if (*infer_cmd) return cmd_infer(infer, out, err);
    if (*bench_cmd) return cmd_bench(bench, out, err);
    if (*report_cmd) return cmd_report(report_inputs, report_out, out);
    if (*rmodel_cmd) return cmd_random_model(rmodel, out);
    if (*rinput_cmd) return cmd_random_input(rinput, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    const bool usage = e.code() == ErrorCode::kUsage || e.code() == ErrorCode::kPrecondition;
    return usage ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace onexn::cli
