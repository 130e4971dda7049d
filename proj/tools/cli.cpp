#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "angularpu/error.hpp"
#include "angularpu/evaluator.hpp"
#include "angularpu/theory.hpp"
#include "json.hpp"

namespace angularpu::cli {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::InvalidSpec, field + ": " + why);
}

std::string read_text(const std::string& path, ErrorCode on_fail) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(on_fail, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSpec:
      return kExitUsage;
    case ErrorCode::NumericAbort:
    case ErrorCode::NumericOverflow:
    case ErrorCode::DegenerateEmbedding:
    case ErrorCode::DegeneratePrototype:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

nlohmann::json parse_json_object(const std::string& text, const char* what) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    bad(what, std::string("not valid JSON (") + e.what() + ")");
  }
  if (!j.is_object()) bad(what, "must be a JSON object");
  return j;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

TrainConfig parse_config_impl(const std::string& text, bool* has_embed_dim) {
  const nlohmann::json j = parse_json_object(text, "config");
  static const std::set<std::string> required = {"lr",         "batch_size", "epochs", "lambda",
                                                 "kappa",      "t",          "margin_mode",
                                                 "logit_mode", "geometry",   "seed", "val_fraction"};
  static const std::set<std::string> optional = {"m", "margin_param", "weight_gradient", "hidden", "embed_dim",
                                                 "dropout"};
  for (const auto& [k, v] : j.items()) {
    if (!required.count(k) && !optional.count(k)) bad(k, "unknown config key");
  }
  for (const auto& k : required) {
    if (!j.contains(k)) bad(k, "missing required config field");
  }
  TrainConfig c;
  std::string field;
  auto count = [&](const char* key) {
    field = key;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad(key, "must be a non-negative integer");
    return v.get<std::size_t>();
  };
  auto real = [&](const char* key) {
    field = key;
    const auto& v = j.at(key);
    if (!v.is_number()) bad(key, "must be a number");
    return v.get<double>();
  };
  auto text_of = [&](const char* key) {
    field = key;
    const auto& v = j.at(key);
    if (!v.is_string()) bad(key, "must be a string");
    return v.get<std::string>();
  };
  c.lr = real("lr");
  c.batch_size = count("batch_size");
  c.epochs = count("epochs");
  c.lambda = real("lambda");
  c.kappa = real("kappa");
  c.t = real("t");
  c.margin_mode = parse_margin_mode(text_of("margin_mode"));
  c.logit_mode = parse_logit_mode(text_of("logit_mode"));
  c.geometry = parse_geometry(text_of("geometry"));
  field = "seed";
  if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<std::int64_t>() >= 0)) {
    bad("seed", "must be a non-negative integer");
  }
  c.seed = j.at("seed").get<std::uint64_t>();
  c.val_fraction = real("val_fraction");
  if (j.contains("m")) c.m = real("m");
  if (j.contains("margin_param")) c.margin_param = parse_margin_param(text_of("margin_param"));
  if (j.contains("weight_gradient")) c.weight_gradient = parse_weight_gradient(text_of("weight_gradient"));
  if (j.contains("hidden")) {
    const auto& h = j.at("hidden");
    if (!h.is_array()) bad("hidden", "must be an array of layer widths");
    c.hidden.clear();
    for (const auto& w : h) {
      if (!w.is_number_integer() || w.get<std::int64_t>() <= 0) bad("hidden", "layer widths must be positive integers");
      c.hidden.push_back(w.get<std::size_t>());
    }
  }
  if (j.contains("embed_dim")) c.embed_dim = count("embed_dim");
  if (j.contains("dropout")) c.dropout = real("dropout");
  if (has_embed_dim) *has_embed_dim = j.contains("embed_dim");
  c.validate();
  return c;
}

TrainConfig load_config(const std::string& path, const PuDataset* ds) {
  bool has_embed = false;
  TrainConfig c = parse_config_impl(read_text(path, ErrorCode::InvalidSpec), &has_embed);
  if (!has_embed && ds && ds->manifest) c.embed_dim = ds->manifest->synthetic.d_sphere;
  return c;
}

int cmd_gen_data(const std::string& spec_path, const std::string& out) {
  DatasetManifest m = manifest_from_string(read_text(spec_path, ErrorCode::InvalidSpec));
  if (!(m.synthetic.pi < 1.0)) bad("pi", "must lie in (0, 1)");
  m.synthetic.mu_true = resolve_mu_true(m.synthetic).vec();
  PuDataset ds = build_pu_split(generate_synthetic(m.synthetic), m.split);
  ds.manifest = m;
  save_dataset(ds, out);
  std::cout << "wrote " << ds.size() << " rows to " << out << "\n";
  return kExitOk;
}

int cmd_train(const std::string& data, const std::string& config, const std::string& out, const std::string& log) {
  const PuDataset ds = load_dataset(data);
  const TrainConfig c = load_config(config, &ds);
  const TrainReport rep = train(ds, c);
  save_checkpoint(rep.final_state, out);
  std::string lines;
  for (const auto& e : rep.epochs) lines += e.to_json() + "\n";
  write_text(log, lines);
  const auto& last = rep.epochs.back();
  std::cout << "trained " << rep.epochs.size() << " epochs, val_auc " << fmt(last.val_auc) << ", checkpoint " << out
            << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& data, const std::string& ckpt, const std::string& out, const std::string& pr_out) {
  const PuDataset ds = load_dataset(data);
  const ModelState model = load_checkpoint(ckpt);
  const MetricsReport rep = evaluate(model, ds);
  write_text(out, rep.to_json());
  if (!pr_out.empty()) write_text(pr_out, pr_curve_csv(pr_curve(score_split(model, ds, Split::test))));
  std::cout << "auc " << fmt(rep.auc) << ", ap " << fmt(rep.ap) << ", f1 " << fmt(rep.f1) << "\n";
  return kExitOk;
}

int cmd_sweep(const std::string& data, const std::string& config, const std::string& grid_path, std::size_t k,
              const std::string& out, unsigned threads) {
  if (k == 0) bad("seeds", "must be >= 1");
  const SweepGrid grid = parse_grid(read_text(grid_path, ErrorCode::InvalidSpec));
  const PuDataset ds = load_dataset(data);
  const TrainConfig base = load_config(config, &ds);
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < k; ++s) seeds.push_back(base.seed + s);
  const SweepTable table = run_sweep(ds, base, grid, seeds, threads);
  write_text(out, table.to_csv());
  std::size_t failed = 0;
  for (const auto& r : table.runs) {
    if (!r.ok) {
      ++failed;
      std::cerr << "run lambda=" << r.config.lambda << " kappa=" << r.config.kappa << " m=" << r.config.m
                << " seed=" << r.seed << " failed: " << r.error << "\n";
    }
  }
  std::cout << table.runs.size() << " runs, " << failed << " failed, table " << out << "\n";
  return failed ? kExitPartialSweep : kExitOk;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& out, double tighten) {
  VerifyOptions opt;
  opt.tighten = tighten;
  const auto reports = run_suite(suite, seed, opt);
  std::string lines;
  std::size_t failed = 0;
  for (const auto& r : reports) {
    lines += r.to_json() + "\n";
    if (!r.passed()) {
      ++failed;
      std::cerr << "check " << r.check_name << " failed (slack " << r.slack << ")\n";
    }
  }
  write_text(out, lines);
  std::cout << reports.size() << " checks, " << failed << " failed\n";
  return failed ? 1 : kExitOk;
}

int cmd_plot(const std::string& in, const std::string& x, const std::string& y, const std::string& out) {
  write_text(out, render_sweep_svg(read_text(in, ErrorCode::IoFailure), x, y));
  std::cout << "wrote " << out << "\n";
  return kExitOk;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

TrainConfig parse_train_config(const std::string& text) { return parse_config_impl(text, nullptr); }

SweepGrid parse_grid(const std::string& text) {
  const nlohmann::json j = parse_json_object(text, "grid");
  SweepGrid g;
  for (const auto& [k, v] : j.items()) {
    std::vector<double>* dst = k == "lambda" ? &g.lambda : k == "kappa" ? &g.kappa : k == "m" ? &g.m : nullptr;
    if (!dst) bad(k, "unknown grid axis");
    if (!v.is_array()) bad(k, "must be an array of numbers");
    for (const auto& x : v) {
      if (!x.is_number()) bad(k, "must be an array of numbers");
      dst->push_back(x.get<double>());
    }
  }
  if (g.empty()) bad("grid", "no values to sweep");
  return g;
}

std::string render_sweep_svg(const std::string& csv, const std::string& x, const std::string& y) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) bad("in", "empty sweep table");
  const auto header = split_csv(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) bad(name, "no such column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t xi = column(x);
  const std::size_t yi = column(y);
  const auto seed_it = std::find(header.begin(), header.end(), "seed");
  const std::size_t si = seed_it == header.end() ? header.size() : static_cast<std::size_t>(seed_it - header.begin());

  struct Point {
    double mean = 0.0;
    double sd = 0.0;
    bool band = false;
    std::vector<double> samples;
  };
  std::map<double, Point> runs, summary;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) bad("in", "row has " + std::to_string(cells.size()) + " cells");
    const auto xv = to_number(cells[xi]);
    if (!xv) bad(x, "column is not numeric");
    const bool is_summary = si < cells.size() && cells[si] == "summary";
    const std::string& cell = cells[yi];
    if (is_summary) {
      const auto pm = cell.find("+-");
      const auto mean = to_number(cell.substr(0, pm));
      if (!mean) continue;
      Point& p = summary[*xv];
      p.mean = *mean;
      if (pm != std::string::npos) {
        p.sd = to_number(cell.substr(pm + 2)).value_or(0.0);
        p.band = true;
      }
    } else if (const auto v = to_number(cell)) {
      runs[*xv].samples.push_back(*v);
    }
  }
  std::map<double, Point>& pts = summary.empty() ? runs : summary;
  if (summary.empty()) {
    for (auto& [k, p] : runs) {
      for (double v : p.samples) p.mean += v;
      p.mean /= static_cast<double>(p.samples.size());
    }
  }

  constexpr double W = 640, H = 400, L = 70, R = 20, T = 30, B = 60;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << " " << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"14\">" << x
      << "</text>\n";
  svg << "<text x=\"18\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
      << (T + H - B) / 2 << ")\">" << y << "</text>\n";

  if (!pts.empty()) {
    double x0 = pts.begin()->first, x1 = pts.rbegin()->first;
    double y0 = 1e300, y1 = -1e300;
    for (const auto& [k, p] : pts) {
      y0 = std::min(y0, p.mean - p.sd);
      y1 = std::max(y1, p.mean + p.sd);
    }
    if (x1 == x0) {
      x0 -= 0.5;
      x1 += 0.5;
    }
    if (y1 == y0) {
      const double pad = std::max(0.5, std::abs(y0) * 0.1);
      y0 -= pad;
      y1 += pad;
    }
    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

    const bool any_band = std::any_of(pts.begin(), pts.end(), [](const auto& kv) { return kv.second.band; });
    if (any_band && pts.size() > 1) {
      svg << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"";
      for (const auto& [k, p] : pts) svg << fmt(px(k)) << "," << fmt(py(p.mean + p.sd)) << " ";
      for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
        svg << fmt(px(it->first)) << "," << fmt(py(it->second.mean - it->second.sd)) << " ";
      }
      svg << "\"/>\n";
    }
    if (pts.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
      for (const auto& [k, p] : pts) svg << fmt(px(k)) << "," << fmt(py(p.mean)) << " ";
      svg << "\"/>\n";
    }
    for (const auto& [k, p] : pts) {
      svg << "<circle cx=\"" << fmt(px(k)) << "\" cy=\"" << fmt(py(p.mean)) << "\" r=\"4\" fill=\"#08519c\"/>\n";
      if (p.band && pts.size() == 1) {
        svg << "<line x1=\"" << fmt(px(k)) << "\" y1=\"" << fmt(py(p.mean - p.sd)) << "\" x2=\"" << fmt(px(k))
            << "\" y2=\"" << fmt(py(p.mean + p.sd)) << "\" stroke=\"#08519c\"/>\n";
      }
    }
    for (const auto& [k, p] : pts) {
      svg << "<line x1=\"" << fmt(px(k)) << "\" y1=\"" << H - B << "\" x2=\"" << fmt(px(k)) << "\" y2=\"" << H - B + 5
          << "\" stroke=\"black\"/>\n";
      svg << "<text class=\"xtick\" x=\"" << fmt(px(k)) << "\" y=\"" << H - B + 20
          << "\" text-anchor=\"middle\" font-size=\"12\">" << fmt(k) << "</text>\n";
    }
    for (int t = 0; t <= 4; ++t) {
      const double v = y0 + (y1 - y0) * t / 4.0;
      svg << "<line x1=\"" << L - 5 << "\" y1=\"" << fmt(py(v)) << "\" x2=\"" << L << "\" y2=\"" << fmt(py(v))
          << "\" stroke=\"black\"/>\n";
      svg << "<text class=\"ytick\" x=\"" << L - 8 << "\" y=\"" << fmt(py(v) + 4)
          << "\" text-anchor=\"end\" font-size=\"12\">" << fmt(v) << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Angular prototype PU learning toolkit"};
  app.require_subcommand(1);

  std::string spec, out, data, config, log, checkpoint, pr_out, grid, suite, in, xcol, ycol;
  std::size_t seeds = 1;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  double tighten = 0.0;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic PU dataset");
  gen->add_option("--spec", spec, "Dataset manifest (JSON)")->required();
  gen->add_option("--out", out, "Output CSV")->required();

  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--data", data, "Dataset CSV")->required();
  tr->add_option("--config", config, "Training config (JSON)")->required();
  tr->add_option("--out", out, "Checkpoint path")->required();
  tr->add_option("--log", log, "Per-epoch JSON-lines log")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--data", data, "Dataset CSV")->required();
  ev->add_option("--checkpoint", checkpoint, "Checkpoint path")->required();
  ev->add_option("--out", out, "Metrics report (JSON)")->required();
  ev->add_option("--pr-curve", pr_out, "Optional PR curve CSV");

  auto* sw = app.add_subcommand("sweep", "One-axis-at-a-time hyperparameter sweep");
  sw->add_option("--data", data, "Dataset CSV")->required();
  sw->add_option("--config", config, "Base training config (JSON)")->required();
  sw->add_option("--grid", grid, "Grid (JSON with lambda/kappa/m arrays)")->required();
  sw->add_option("--seeds", seeds, "Seeds per configuration")->required();
  sw->add_option("--out", out, "Sweep CSV")->required();
  sw->add_option("--threads", threads, "Worker threads (0 = all cores)");

  auto* ve = app.add_subcommand("verify", "Monte Carlo checks of the theoretical bounds");
  ve->add_option("--suite", suite, "all or a check name")->required();
  ve->add_option("--seed", seed, "Seed");
  ve->add_option("--out", out, "JSON-lines reports")->required();
  ve->add_option("--tighten", tighten)->group("");

  auto* pl = app.add_subcommand("plot", "Render sweep columns as SVG");
  pl->add_option("--in", in, "Sweep CSV")->required();
  pl->add_option("--x", xcol, "x column")->required();
  pl->add_option("--y", ycol, "y column")->required();
  pl->add_option("--out", out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen) return cmd_gen_data(spec, out);
    if (*tr) return cmd_train(data, config, out, log);
    if (*ev) return cmd_eval(data, checkpoint, out, pr_out);
    if (*sw) return cmd_sweep(data, config, grid, seeds, out, threads);
    if (*ve) return cmd_verify(suite, seed, out, tighten);
    if (*pl) return cmd_plot(in, xcol, ycol, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace angularpu::cli
