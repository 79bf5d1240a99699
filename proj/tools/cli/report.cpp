#include "cli/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "cli/bench_runner.hpp"
#include "json.hpp"
#include "onexn/error.hpp"

namespace onexn::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::string fmt(double v, const char* f) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(line);
  std::string part;
  while (std::getline(ss, part, sep)) parts.push_back(part);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

double to_double(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::kFormat, path.filename().string() + ": bad number '" + s + "'");
  }
}

std::vector<BenchRow> parse_bench_csv(const std::string& text, const fs::path& path) {
  std::stringstream ss(text);
  std::string line;
  std::getline(ss, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kBenchCsvHeader) fail(ErrorCode::kFormat, path.string() + ": unexpected CSV header");
  std::vector<BenchRow> rows;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 10) fail(ErrorCode::kFormat, path.string() + ": row needs 10 columns");
    BenchRow r;
    r.shape = f[0];
    r.pattern = f[1];
    r.block_width = static_cast<std::size_t>(to_double(f[2], path));
    r.rate = to_double(f[3], path);
    r.executor = f[4];
    r.threads = static_cast<unsigned>(to_double(f[5], path));
    r.median_ns = to_double(f[6], path);
    r.p10_ns = to_double(f[7], path);
    r.p90_ns = to_double(f[8], path);
    r.speedup_vs_dense = to_double(f[9], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<BenchRow> parse_bench_json(const json& doc) {
  std::vector<BenchRow> rows;
  for (const auto& j : doc.at("rows")) {
    BenchRow r;
    r.shape = j.at("shape").get<std::string>();
    r.pattern = j.at("pattern").get<std::string>();
    r.block_width = j.at("N").get<std::size_t>();
    r.rate = j.at("p").get<double>();
    r.executor = j.at("executor").get<std::string>();
    r.threads = j.at("threads").get<unsigned>();
    r.median_ns = j.at("median_ns").get<double>();
    r.p10_ns = j.at("p10_ns").get<double>();
    r.p90_ns = j.at("p90_ns").get<double>();
    r.speedup_vs_dense = j.at("speedup_vs_dense").get<double>();
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string svg_header(int width, int height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::vector<BenchRow> read_bench_rows(const fs::path& path) {
  const std::string text = slurp(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      const json doc = json::parse(text);
      if (doc.value("kind", std::string()) != "bench") {
        fail(ErrorCode::kFormat, path.string() + ": not a bench file");
      }
      return parse_bench_json(doc);
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, path.string() + ": " + e.what());
    }
  }
  return parse_bench_csv(text, path);
}

void sort_bench_rows(std::vector<BenchRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.shape, a.pattern, a.rate, a.block_width, a.executor, a.threads) <
           std::tie(b.shape, b.pattern, b.rate, b.block_width, b.executor, b.threads);
  });
}

std::string bench_rows_csv(const std::vector<BenchRow>& rows) {
  std::string out = std::string(kBenchCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += r.shape + "," + r.pattern + "," + std::to_string(r.block_width) + "," +
           fmt(r.rate, "%g") + "," + r.executor + "," + std::to_string(r.threads) + "," +
           fmt(r.median_ns, "%.0f") + "," + fmt(r.p10_ns, "%.0f") + "," + fmt(r.p90_ns, "%.0f") +
           "," + fmt(r.speedup_vs_dense, "%.4f") + "\n";
  }
  return out;
}

HistogramPair collect_histograms(const std::vector<PruneSummary>& summaries) {
  HistogramPair pair;
  for (const auto& s : summaries) {
    auto& target = s.rearranged ? pair.with_rearrange : pair.without_rearrange;
    (s.rearranged ? pair.summaries_with : pair.summaries_without) += 1;
    for (const auto& layer : s.layers) {
      for (std::size_t b = 0; b < kMagnitudeBins; ++b) target[b] += layer.magnitude_hist[b];
    }
  }
  return pair;
}

std::string histogram_csv(const HistogramPair& pair) {
  std::string out = "bin_lo,bin_hi,without_rearrange,with_rearrange\n";
  for (std::size_t b = 0; b < kMagnitudeBins; ++b) {
    out += fmt(static_cast<double>(b) / kMagnitudeBins, "%.2f") + "," +
           fmt(static_cast<double>(b + 1) / kMagnitudeBins, "%.2f") + "," +
           std::to_string(pair.without_rearrange[b]) + "," +
           std::to_string(pair.with_rearrange[b]) + "\n";
  }
  return out;
}

std::string latency_svg(const std::vector<BenchRow>& rows) {
  constexpr int W = 720, H = 420, L = 70, R = 230, T = 30, B = 50;
  // One series per (shape, pattern, N, executor, threads), plotted over p.
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  double max_ms = 0.0;
  for (const auto& r : rows) {
    const std::string key = r.shape + " " + r.pattern +
                            (r.block_width ? " N=" + std::to_string(r.block_width) : "") + " " +
                            r.executor + " t" + std::to_string(r.threads);
    series[key].emplace_back(r.rate, r.median_ns / 1e6);
    max_ms = std::max(max_ms, r.median_ns / 1e6);
  }
  if (max_ms <= 0.0) max_ms = 1.0;
  auto px = [&](double p) { return L + p * (W - L - R); };
  auto py = [&](double ms) { return H - B - ms / max_ms * (H - T - B); };

  std::string svg = svg_header(W, H);
  svg += "<text x=\"" + std::to_string(L) + "\" y=\"18\">median latency vs pruning rate</text>\n";
  svg += "<line x1=\"" + fmt(px(0), "%.1f") + "\" y1=\"" + fmt(py(0), "%.1f") + "\" x2=\"" +
         fmt(px(1), "%.1f") + "\" y2=\"" + fmt(py(0), "%.1f") + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fmt(px(0), "%.1f") + "\" y1=\"" + fmt(py(0), "%.1f") + "\" x2=\"" +
         fmt(px(0), "%.1f") + "\" y2=\"" + fmt(py(max_ms), "%.1f") + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double p = i / 4.0;
    svg += "<text x=\"" + fmt(px(p) - 8, "%.1f") + "\" y=\"" + std::to_string(H - B + 16) +
           "\">" + fmt(p, "%.2f") + "</text>\n";
    const double ms = max_ms * i / 4.0;
    svg += "<text x=\"4\" y=\"" + fmt(py(ms) + 4, "%.1f") + "\">" + fmt(ms, "%.3g") +
           " ms</text>\n";
  }
  svg += "<text x=\"" + fmt(px(0.5) - 30, "%.1f") + "\" y=\"" + std::to_string(H - 12) +
         "\">pruning rate p</text>\n";

  std::size_t index = 0;
  for (auto& [key, points] : series) {
    std::sort(points.begin(), points.end());
    const char* color = kPalette[index % std::size(kPalette)];
    std::string poly;
    for (const auto& [p, ms] : points) poly += fmt(px(p), "%.1f") + "," + fmt(py(ms), "%.1f") + " ";
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" +
           poly + "\"/>\n";
    for (const auto& [p, ms] : points) {
      svg += "<circle cx=\"" + fmt(px(p), "%.1f") + "\" cy=\"" + fmt(py(ms), "%.1f") +
             "\" r=\"3\" fill=\"" + color + "\"/>\n";
    }
    const int ly = T + 14 * static_cast<int>(index);
    svg += "<text x=\"" + std::to_string(W - R + 10) + "\" y=\"" + std::to_string(ly) +
           "\" fill=\"" + color + "\">" + key + "</text>\n";
    ++index;
  }
  svg += "</svg>\n";
  return svg;
}

std::string histogram_svg(const HistogramPair& pair) {
  constexpr int W = 720, H = 380, L = 60, R = 20, T = 40, B = 50;
  std::size_t max_count = 1;
  for (std::size_t b = 0; b < kMagnitudeBins; ++b) {
    max_count = std::max({max_count, pair.without_rearrange[b], pair.with_rearrange[b]});
  }
  const double slot = static_cast<double>(W - L - R) / kMagnitudeBins;
  auto bar_height = [&](std::size_t c) {
    return static_cast<double>(c) / static_cast<double>(max_count) * (H - T - B);
  };
  std::string svg = svg_header(W, H);
  svg += "<text x=\"" + std::to_string(L) +
         "\" y=\"18\">retained |w| / max|w| per layer (counts)</text>\n";
  svg += "<text x=\"" + std::to_string(L) + "\" y=\"32\" fill=\"#7f7f7f\">w/o rearrange</text>\n";
  svg += "<text x=\"" + std::to_string(L + 110) + "\" y=\"32\" fill=\"#1f77b4\">rearrange</text>\n";
  for (std::size_t b = 0; b < kMagnitudeBins; ++b) {
    const double x0 = L + b * slot;
    const double h0 = bar_height(pair.without_rearrange[b]);
    const double h1 = bar_height(pair.with_rearrange[b]);
    svg += "<rect x=\"" + fmt(x0 + 1, "%.1f") + "\" y=\"" + fmt(H - B - h0, "%.1f") +
           "\" width=\"" + fmt(slot / 2 - 1, "%.1f") + "\" height=\"" + fmt(h0, "%.1f") +
           "\" fill=\"#7f7f7f\"/>\n";
    svg += "<rect x=\"" + fmt(x0 + slot / 2, "%.1f") + "\" y=\"" + fmt(H - B - h1, "%.1f") +
           "\" width=\"" + fmt(slot / 2 - 1, "%.1f") + "\" height=\"" + fmt(h1, "%.1f") +
           "\" fill=\"#1f77b4\"/>\n";
    if (b % 5 == 0) {
      svg += "<text x=\"" + fmt(x0, "%.1f") + "\" y=\"" + std::to_string(H - B + 16) + "\">" +
             fmt(static_cast<double>(b) / kMagnitudeBins, "%.2f") + "</text>\n";
    }
  }
  svg += "<line x1=\"" + std::to_string(L) + "\" y1=\"" + std::to_string(H - B) + "\" x2=\"" +
         std::to_string(W - R) + "\" y2=\"" + std::to_string(H - B) + "\" stroke=\"black\"/>\n";
  svg += "</svg>\n";
  return svg;
}

std::vector<fs::path> generate_report(const std::vector<fs::path>& inputs, const fs::path& out_dir) {
  if (inputs.empty()) fail(ErrorCode::kUsage, "report needs at least one input file");

  std::vector<BenchRow> bench;
  std::vector<PruneSummary> summaries;
  std::vector<std::string> summary_names;
  for (const auto& path : inputs) {
    if (!fs::exists(path)) fail(ErrorCode::kIo, "missing input " + path.string());
    const std::string text = slurp(path);
    bool is_summary = false;
    if (text.find("\"prune_summary\"") != std::string::npos) {
      try {
        is_summary = json::parse(text).value("kind", std::string()) == "prune_summary";
      } catch (const json::exception&) {
        is_summary = false;
      }
    }
    if (is_summary) {
      summaries.push_back(PruneSummary::from_json(text));
      summary_names.push_back(path.string());
    } else {
      auto rows = read_bench_rows(path);
      bench.insert(bench.end(), rows.begin(), rows.end());
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) fail(ErrorCode::kIo, "cannot create " + out_dir.string());

  std::vector<fs::path> written;
  auto emit = [&](const char* name, const std::string& text) {
    spit(out_dir / name, text);
    written.push_back(out_dir / name);
  };
  if (!bench.empty()) {
    sort_bench_rows(bench);
    emit("bench_merged.csv", bench_rows_csv(bench));
    emit("latency_vs_p.svg", latency_svg(bench));
  }
  if (!summaries.empty()) {
    const HistogramPair pair = collect_histograms(summaries);
    emit("retained_magnitude.csv", histogram_csv(pair));
    emit("retained_magnitude.svg", histogram_svg(pair));
    std::string layers = "summary,rearranged,pattern,N,p,layer,kept,granules,retained_l1,total_l1\n";
    for (std::size_t i = 0; i < summaries.size(); ++i) {
      const auto& s = summaries[i];
      for (const auto& l : s.layers) {
        layers += summary_names[i] + "," + (s.rearranged ? "1" : "0") + "," +
                  std::string(to_string(s.pattern)) + "," + std::to_string(s.block_width) + "," +
                  fmt(s.rate, "%g") + "," + l.id + "," + std::to_string(l.kept) + "," +
                  std::to_string(l.granules) + "," + fmt(l.retained_l1, "%.6g") + "," +
                  fmt(l.total_l1, "%.6g") + "\n";
      }
    }
    emit("prune_layers.csv", layers);
  }
  return written;
}

}  // namespace onexn::cli
