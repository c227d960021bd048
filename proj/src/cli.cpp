// Copyright 2026 The LSST Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lsst/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lsst/blocks.hpp"
#include "lsst/cassi.hpp"
#include "lsst/complexity.hpp"
#include "lsst/config.hpp"
#include "lsst/errors.hpp"
#include "lsst/gradsuite.hpp"
#include "lsst/io.hpp"
#include "lsst/loss.hpp"
#include "lsst/metrics.hpp"
#include "lsst/rng.hpp"
#include "lsst/train.hpp"

namespace lsst::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Everything that determines a run besides its input files.
struct RunSpec {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 1;
  std::string variant = "S";
  std::size_t bands = 0, width = 0, height = 0, step = 0, groups = 0, channels = 0;
  double alpha = 0.5;
  std::string loss = "fsl";
  std::size_t steps = 200;
  double lr = 4e-4;
  std::size_t batch = 1;
  std::size_t threads = 1;
  std::string out;

  std::string data, meas, mask, checkpoint, truth, recon, cube;
  double density = 0.5;
  double noise = 0.0;
  std::size_t blobs = 6;
  bool resume = false;
  std::size_t save_every = 0;
  std::string scope = "all";
  std::size_t window = 8;
};

std::string data_root(const RunSpec& spec) {
  if (!spec.data.empty()) return spec.data;
  if (const char* env = std::getenv("LSST_DATA_DIR"); env && *env) return env;
  return ".";
}

fs::path input_path(const std::string& given, const RunSpec& spec, const char* default_name) {
  return given.empty() ? fs::path(data_root(spec)) / default_name : fs::path(given);
}

void require_file(const fs::path& path, const std::string& what, const std::string& hint) {
  if (!fs::is_regular_file(path)) {
    throw IoError("missing " + what + " file '" + path.string() + "'; " + hint);
  }
}

ModelConfig make_config(const RunSpec& spec, bool full_scale) {
  const Variant v = parse_variant(spec.variant);
  ModelConfig cfg = full_scale ? ModelConfig::preset(v) : ModelConfig::toy(v);
  if (spec.channels) cfg.channels = spec.channels;
  if (spec.groups) cfg.groups = spec.groups;
  if (spec.bands) cfg.bands = spec.bands;
  if (spec.step) cfg.step = spec.step;
  cfg.alpha = spec.alpha;
  cfg.validate();
  return cfg;
}

ordered_json config_json(const ModelConfig& c) {
  return {{"variant", variant_name(c.variant)},
          {"channels", c.channels},
          {"groups", c.groups},
          {"repeats", c.repeats},
          {"dw_kernel", c.dw_kernel},
          {"fusion_kernel", c.fusion_kernel},
          {"ffn_expansion", c.ffn_expansion},
          {"bands", c.bands},
          {"step", c.step},
          {"alpha", c.alpha}};
}

ordered_json metrics_json(const metrics::MetricReport& r) {
  return {{"psnr", r.psnr},           {"ssim", r.ssim},           {"sam", r.sam},
          {"psnr_bands", r.psnr_bands}, {"ssim_bands", r.ssim_bands}, {"sam_pixels", r.sam_pixels}};
}

void write_manifest(const fs::path& dir, const RunSpec& spec, ordered_json body) {
  ordered_json m;
  m["tool"] = "lsst";
  m["version"] = kVersion;
  m["command"] = spec.command;
  m["argv"] = spec.argv;
  m["seed"] = spec.seed;
  for (auto& [k, v] : body.items()) m[k] = v;
  io::write_text_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) {
    throw IoError("cannot create output directory '" + p.string() + "'" +
                  (ec ? ": " + ec.message() : ""));
  }
  return p;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Console form.
std::string brief(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.5g", v);
  return buf;
}

// --- simulate ----------------------------------------------------------------

int cmd_simulate(const RunSpec& spec, std::ostream& out) {
  const ModelConfig cfg = make_config(spec, false);
  const std::size_t h = spec.height ? spec.height : 32;
  const std::size_t w = spec.width ? spec.width : 32;
  if (!(spec.density > 0.0 && spec.density <= 1.0)) {
    throw ConfigError("--density must be in (0, 1]");
  }
  if (spec.noise < 0.0) throw ConfigError("--noise must be nonnegative");
  const Rng root(spec.seed);
  const Tensor scene =
      cassi::synth_scene(h, w, cfg.bands, root.fork("scene").next_u64(), spec.blobs);
  const Tensor mask = cassi::random_mask(h, w, spec.density, root.fork("mask").next_u64());
  const cassi::SensingOperator op(mask, cfg.step);
  cassi::NoiseSpec noise;
  if (spec.noise > 0.0) noise = {cassi::NoiseKind::kGaussian, spec.noise, root.fork("noise").next_u64()};
  const Tensor y = cassi::forward_sense(scene, op, noise);

  const fs::path dir = ensure_dir(spec.out.empty() ? data_root(spec) : spec.out);
  io::write_cube(dir / "scene.hsc", scene);
  io::write_mask(dir / "mask.hsc", mask);
  io::write_measurement(dir / "meas.hsc", y);
  write_manifest(dir, spec,
                 {{"height", h},
                  {"width", w},
                  {"bands", cfg.bands},
                  {"step", cfg.step},
                  {"density", spec.density},
                  {"noise_sigma", spec.noise},
                  {"blobs", spec.blobs},
                  {"outputs", {"scene.hsc", "mask.hsc", "meas.hsc"}}});
  out << "scene " << h << "x" << w << "x" << cfg.bands << ", measurement " << y.dim(0) << "x"
      << y.dim(1) << " -> " << dir.string() << "\n";
  return kExitOk;
}

// --- train -------------------------------------------------------------------

std::string csv_header(std::size_t bands) {
  std::vector<std::string> f{"step", "total"};
  for (std::size_t k = 0; k < bands; ++k) f.push_back("l_" + std::to_string(k));
  for (std::size_t k = 0; k < bands; ++k) f.push_back("w_" + std::to_string(k));
  return io::csv_row(f);
}

std::string csv_record(const train::StepRecord& r) {
  std::vector<std::string> f{std::to_string(r.step), fmt(r.total)};
  for (double v : r.rmse) f.push_back(fmt(v));
  for (double v : r.weights) f.push_back(fmt(v));
  return io::csv_row(f);
}

// Header plus the rows for steps 1..keep of an earlier run.
std::string resumed_csv(const fs::path& path, std::uint64_t keep, std::size_t bands) {
  require_file(path, "loss curve", "cannot resume without the earlier loss.csv");
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  std::string result = csv_header(bands);
  std::size_t pos = text.find("\r\n");
  if (pos == std::string::npos || text.substr(0, pos + 2) != result) {
    throw ParseError("loss.csv header does not match the configured band count", 0);
  }
  pos += 2;
  for (std::uint64_t row = 1; row <= keep; ++row) {
    const std::size_t end = text.find("\r\n", pos);
    if (end == std::string::npos) {
      throw ParseError("loss.csv has fewer rows than the optimizer step count " +
                           std::to_string(keep),
                       pos);
    }
    result += text.substr(pos, end + 2 - pos);
    pos = end + 2;
  }
  return result;
}

int cmd_train(const RunSpec& spec, std::ostream& out) {
  const fs::path data = data_root(spec);
  const fs::path scene_path = data / "scene.hsc", mask_path = data / "mask.hsc";
  const std::string hint = "run `lsst simulate --out " + data.string() +
                           "` first or point --data / LSST_DATA_DIR at a simulated dataset";
  require_file(scene_path, "scene", hint);
  require_file(mask_path, "mask", hint);
  train::Dataset ds{io::read_cube(scene_path), io::read_mask(mask_path)};

  RunSpec eff = spec;
  if (!eff.bands) eff.bands = ds.scene.dim(2);
  const ModelConfig cfg = make_config(eff, false);
  if (cfg.bands != ds.scene.dim(2)) {
    throw DimensionError("scene has " + std::to_string(ds.scene.dim(2)) + " bands but --bands is " +
                         std::to_string(cfg.bands));
  }
  if (const fs::path meas = data / "meas.hsc"; fs::is_regular_file(meas)) {
    const Tensor y = io::read_measurement(meas);
    const cassi::SensingOperator op(ds.mask, cfg.step);
    if (y.dim(1) != op.measurement_width(cfg.bands)) {
      throw DimensionError("meas.hsc is " + std::to_string(y.dim(1)) + " columns wide; step " +
                           std::to_string(cfg.step) + " implies " +
                           std::to_string(op.measurement_width(cfg.bands)) + " (pass --step)");
    }
  }

  train::TrainOptions opt;
  if (spec.loss == "fsl") {
    opt.loss = train::LossKind::kFocal;
  } else if (spec.loss == "rmse") {
    opt.loss = train::LossKind::kRmse;
  } else {
    throw UsageError("--loss must be fsl or rmse, got '" + spec.loss + "'");
  }
  opt.alpha = spec.alpha;
  opt.lr = spec.lr;
  opt.batch = spec.batch;
  opt.threads = spec.threads;

  const fs::path dir = ensure_dir(spec.out.empty() ? data.string() : spec.out);
  const fs::path ckpt = dir / "model.ckpt", state_path = dir / "optim.state",
                 csv_path = dir / "loss.csv";

  std::optional<train::Trainer> trainer;
  std::string csv;
  if (spec.resume) {
    require_file(ckpt, "checkpoint", "train without --resume first");
    require_file(state_path, "optimizer state", "train without --resume first");
    OptimizerState state = io::load_optimizer(state_path);
    csv = resumed_csv(csv_path, state.step, cfg.bands);
    trainer.emplace(cfg, opt, ds, io::load_checkpoint(ckpt, cfg), std::move(state));
  } else {
    csv = csv_header(cfg.bands);
    trainer.emplace(cfg, opt, ds, blocks::build_model(cfg, spec.seed));
  }

  auto save = [&] {
    io::save_checkpoint(ckpt, trainer->params(), cfg);
    io::save_optimizer(state_path, trainer->optimizer());
    io::write_text_atomic(csv_path, csv);
  };

  const std::uint64_t start = trainer->optimizer().step;
  std::optional<double> first, last;
  while (trainer->optimizer().step < spec.steps) {
    const train::StepRecord r = trainer->step();
    csv += csv_record(r);
    if (!first) first = r.total;
    last = r.total;
    if (spec.save_every && r.step % spec.save_every == 0) save();
  }
  save();
  const double final_loss = trainer->evaluate().total;
  write_manifest(dir, spec,
                 {{"config", config_json(cfg)},
                  {"loss", spec.loss},
                  {"steps", spec.steps},
                  {"lr", trainer->optimizer().config.lr},
                  {"batch", spec.batch},
                  {"threads", spec.threads},
                  {"resumed_from_step", start},
                  {"data", data.string()},
                  {"final_loss", final_loss},
                  {"outputs", {"model.ckpt", "optim.state", "loss.csv"}}});
  if (first) {
    out << "steps " << start + 1 << ".." << trainer->optimizer().step << ": loss " << brief(*first)
        << " -> " << brief(*last) << ", after final update " << brief(final_loss) << "\n";
  } else {
    out << "already at step " << start << "; nothing to do\n";
  }
  return kExitOk;
}

// --- reconstruct / eval / corrmap ----------------------------------------------

int cmd_reconstruct(const RunSpec& spec, std::ostream& out) {
  const fs::path meas = input_path(spec.meas, spec, "meas.hsc");
  const fs::path mask_path = input_path(spec.mask, spec, "mask.hsc");
  const fs::path ckpt = input_path(spec.checkpoint, spec, "model.ckpt");
  require_file(meas, "measurement", "pass --meas or set LSST_DATA_DIR");
  require_file(mask_path, "mask", "pass --mask or set LSST_DATA_DIR");
  require_file(ckpt, "checkpoint", "pass --checkpoint or run `lsst train`");

  const std::vector<std::byte> bytes = io::read_file(ckpt);
  const ModelConfig cfg = io::decode_checkpoint(bytes).config;
  const ParameterStore store = io::load_checkpoint(bytes, cfg);
  const Tensor y = io::read_measurement(meas);
  const Tensor mask = io::read_mask(mask_path);
  const cassi::SensingOperator op(mask, cfg.step);
  if (y.dim(0) != mask.dim(0) || y.dim(1) != op.measurement_width(cfg.bands)) {
    throw DimensionError("measurement " + shape_str(y.shape()) + " does not fit mask " +
                         shape_str(mask.shape()) + " with " + std::to_string(cfg.bands) +
                         " bands at step " + std::to_string(cfg.step));
  }
  const Tensor recon = blocks::reconstruct(store, cfg, y, op);

  const fs::path dir = ensure_dir(spec.out.empty() ? data_root(spec) : spec.out);
  io::write_cube(dir / "recon.hsc", recon);
  ordered_json body{{"config", config_json(cfg)},
                    {"inputs", {{"meas", meas.string()}, {"mask", mask_path.string()},
                                {"checkpoint", ckpt.string()}}}};
  std::vector<std::string> outputs{"recon.hsc"};
  if (!spec.truth.empty()) {
    require_file(spec.truth, "ground-truth", "check the --truth path");
    const Tensor truth = io::read_cube(spec.truth);
    if (!truth.same_shape(recon)) {
      throw DimensionError("truth " + shape_str(truth.shape()) + " vs reconstruction " +
                           shape_str(recon.shape()));
    }
    const auto rec = metrics::evaluate(truth, recon);
    const auto base = metrics::evaluate(truth, cassi::shift_back_init(y, op, cfg.bands));
    ordered_json m{{"reconstruction", metrics_json(rec)}, {"shift_back", metrics_json(base)}};
    io::write_text_atomic(dir / "metrics.json", m.dump(2) + "\n");
    outputs.push_back("metrics.json");
    body["inputs"]["truth"] = spec.truth;
    out << "psnr " << brief(rec.psnr) << " dB (shift-back " << brief(base.psnr) << "), ssim "
        << brief(rec.ssim) << ", sam " << brief(rec.sam) << " deg\n";
  }
  body["outputs"] = outputs;
  write_manifest(dir, spec, body);
  out << "reconstruction " << shape_str(recon.shape()) << " -> " << (dir / "recon.hsc").string()
      << "\n";
  return kExitOk;
}

int cmd_eval(const RunSpec& spec, std::ostream& out) {
  if (spec.recon.empty() || spec.truth.empty()) throw UsageError("eval needs --recon and --truth");
  require_file(spec.recon, "reconstruction", "check the --recon path");
  require_file(spec.truth, "ground-truth", "check the --truth path");
  const Tensor recon = io::read_cube(spec.recon);
  const Tensor truth = io::read_cube(spec.truth);
  if (!truth.same_shape(recon)) {
    throw DimensionError("truth " + shape_str(truth.shape()) + " vs reconstruction " +
                         shape_str(recon.shape()));
  }
  const std::string text = metrics_json(metrics::evaluate(truth, recon)).dump(2) + "\n";
  if (!spec.out.empty()) io::write_text_atomic(spec.out, text);
  out << text;
  return kExitOk;
}

int cmd_corrmap(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.cube.empty()) throw UsageError("corrmap needs --cube");
  require_file(spec.cube, "cube", "check the --cube path");
  const metrics::CorrelationMap map = metrics::band_correlation_map(io::read_cube(spec.cube));
  std::vector<std::string> header{"band"};
  for (std::size_t j = 0; j < map.bands; ++j) header.push_back(std::to_string(j));
  std::string csv = io::csv_row(header);
  for (std::size_t i = 0; i < map.bands; ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (std::size_t j = 0; j < map.bands; ++j) row.push_back(fmt(map.at(i, j)));
    csv += io::csv_row(row);
  }
  std::ostringstream stat;
  if (map.bands >= 2) {
    const auto d = metrics::diagonal_dominance(map);
    stat << "diagonal dominance: adjacent " << brief(d.near) << ", distant " << brief(d.far) << "\n";
  }
  if (spec.out.empty()) {
    out << csv;
    err << stat.str();
  } else {
    io::write_text_atomic(spec.out, csv);
    out << stat.str();
  }
  return kExitOk;
}

// --- gradcheck / flops -----------------------------------------------------------

int cmd_gradcheck(const RunSpec& spec, std::ostream& out) {
  const auto rows = gradsuite::run(gradsuite::parse_scope(spec.scope), spec.seed);
  out << gradsuite::to_table(rows);
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.pass() ? 0 : 1;
  if (!spec.out.empty()) {
    std::string csv = io::csv_row({"scope", "name", "max_rel_error", "tolerance", "coords", "pass"});
    for (const auto& r : rows) {
      csv += io::csv_row({r.scope, r.name, fmt(r.max_rel_error), fmt(r.tolerance),
                          std::to_string(r.coords), r.pass() ? "1" : "0"});
    }
    io::write_text_atomic(spec.out, csv);
  }
  out << rows.size() - failed << "/" << rows.size() << " checks passed\n";
  return failed ? kExitVerification : kExitOk;
}

int cmd_flops(const RunSpec& spec, std::ostream& out) {
  std::vector<Variant> variants;
  RunSpec eff = spec;
  if (spec.variant == "all" || spec.variant == "ALL") {
    variants = {Variant::kS, Variant::kM, Variant::kL, Variant::kPlus};
    eff.variant = "S";
  } else {
    variants = {parse_variant(spec.variant)};
  }
  const ModelConfig base = make_config(eff, true);
  const std::size_t h = spec.height ? spec.height : 256;
  const std::size_t w = spec.width ? spec.width : 256;
  const complexity::ComplexityReport report = complexity::audit(base, variants, h, w, spec.window);
  out << report.to_table();
  if (!spec.out.empty()) io::write_text_atomic(spec.out, report.to_csv());
  return report.instrumented_ok && report.enumeration_ok ? kExitOk : kExitVerification;
}

// --- option wiring -----------------------------------------------------------------

void model_options(CLI::App* app, RunSpec& s) {
  app->add_option("--config", s.variant, "model variant: S, M, L or Plus");
  app->add_option("--channels", s.channels, "base channel width C");
  app->add_option("--groups", s.groups, "spectral groups G");
  app->add_option("--bands", s.bands, "spectral bands");
  app->add_option("--step", s.step, "dispersion step in pixels");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunSpec s;
  s.argv = args;
  CLI::App app{"Lightweight separate spectral transformer for snapshot spectral imaging", "lsst"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto* sim = app.add_subcommand("simulate", "synthesize a scene, coded mask and measurement");
  model_options(sim, s);
  sim->add_option("--height", s.height, "scene height (default 32)");
  sim->add_option("--width", s.width, "scene width (default 32)");
  sim->add_option("--density", s.density, "open fraction of the random mask")->capture_default_str();
  sim->add_option("--noise", s.noise, "Gaussian measurement noise sigma")->capture_default_str();
  sim->add_option("--blobs", s.blobs, "number of spectral blobs")->capture_default_str();

  auto* tr = app.add_subcommand("train", "train on a simulated dataset");
  model_options(tr, s);
  tr->add_option("--data", s.data, "dataset directory (default $LSST_DATA_DIR or .)");
  tr->add_option("--loss", s.loss, "fsl or rmse")->capture_default_str();
  tr->add_option("--alpha", s.alpha, "focal exponent")->capture_default_str();
  tr->add_option("--steps", s.steps, "total optimizer steps")->capture_default_str();
  tr->add_option("--lr", s.lr, "Adam learning rate")->capture_default_str();
  tr->add_option("--batch", s.batch, "samples per step")->capture_default_str();
  tr->add_option("--threads", s.threads, "worker threads for the batch")->capture_default_str();
  tr->add_flag("--resume", s.resume, "continue from model.ckpt and optim.state in --out");
  tr->add_option("--save-every", s.save_every, "also save every N steps (0: only at the end)");

  auto* rc = app.add_subcommand("reconstruct", "reconstruct a cube from a measurement");
  rc->add_option("--data", s.data, "default directory for the inputs");
  rc->add_option("--meas", s.meas, "measurement file (default <data>/meas.hsc)");
  rc->add_option("--mask", s.mask, "mask file (default <data>/mask.hsc)");
  rc->add_option("--checkpoint", s.checkpoint, "checkpoint (default <data>/model.ckpt)");
  rc->add_option("--truth", s.truth, "ground-truth cube for metrics");

  auto* ev = app.add_subcommand("eval", "PSNR, SSIM and SAM of a reconstruction");
  ev->add_option("--recon", s.recon, "reconstructed cube")->required();
  ev->add_option("--truth", s.truth, "ground-truth cube")->required();

  auto* cm = app.add_subcommand("corrmap", "band-to-band correlation matrix as CSV");
  cm->add_option("--cube", s.cube, "input cube")->required();

  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gc->add_option("--scope", s.scope, "layer, block, model or all")->capture_default_str();

  auto* fl = app.add_subcommand("flops", "parameter and multiply-add audit");
  model_options(fl, s);
  fl->add_option("--height", s.height, "input height (default 256)");
  fl->add_option("--width", s.width, "input width (default 256)");
  fl->add_option("--window", s.window, "window size for the W-MSA comparison")->capture_default_str();

  for (auto* sub : {sim, tr, rc, ev, cm, gc, fl}) {
    sub->add_option("--seed", s.seed, "random seed")->capture_default_str();
    sub->add_option("--out", s.out, "output directory or file");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) {
      s.command = "simulate";
      return cmd_simulate(s, out);
    }
    if (tr->parsed()) {
      s.command = "train";
      return cmd_train(s, out);
    }
    if (rc->parsed()) {
      s.command = "reconstruct";
      return cmd_reconstruct(s, out);
    }
    if (ev->parsed()) {
      s.command = "eval";
      return cmd_eval(s, out);
    }
    if (cm->parsed()) {
      s.command = "corrmap";
      return cmd_corrmap(s, out, err);
    }
    if (gc->parsed()) {
      s.command = "gradcheck";
      if (gc->count("--seed") == 0) s.seed = 7;
      return cmd_gradcheck(s, out);
    }
    s.command = "flops";
    if (fl->count("--config") == 0) s.variant = "all";
    return cmd_flops(s, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace lsst::cli
