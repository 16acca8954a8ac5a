// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "gnvp/checkpoint.hpp"
#include "gnvp/chem.hpp"
#include "gnvp/error.hpp"
#include "gnvp/flow.hpp"
#include "gnvp/generation.hpp"
#include "gnvp/kernels.hpp"
#include "gnvp/latent.hpp"
#include "gnvp/training.hpp"

namespace gnvp::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string dataset;
  std::string checkpoint;
  std::string out = ".";
  std::uint64_t seed = 0;
  double temp = 0.85;
  std::size_t samples = 1000;
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  std::string spec = "qm9lite";
  std::string property = "logp_proxy";
  std::size_t steps = 10;
  double step_size = 0.5;
  int threads = 0;
  std::string config;
  std::size_t center = 0;
  std::size_t extent = 3;
  std::vector<double> temps{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
};

// Flags the user actually passed (defaults alone do not override configs).
struct Given {
  CLI::Option* seed = nullptr;
  CLI::Option* temp = nullptr;
  CLI::Option* epochs = nullptr;
  CLI::Option* batch_size = nullptr;
  CLI::Option* spec = nullptr;
  bool has(CLI::Option* o) const { return o != nullptr && o->count() > 0; }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write '" + path.string() + "'");
  f << text;
  if (!f) throw DataError("failed writing '" + path.string() + "'");
}

fs::path output_dir(const Options& o) {
  const fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FlowModel load_model(const Options& o, const Given& g) {
  if (g.has(g.spec)) return load_checkpoint(o.checkpoint, GraphSpec::by_name(o.spec));
  return load_checkpoint(o.checkpoint);
}

SampleConfig sample_config(const Options& o, const Given& g, const GraphSpec& spec) {
  SampleConfig c = SampleConfig::for_spec(spec);
  c.num_samples = o.samples;
  if (g.has(g.temp)) c.temperature = static_cast<Real>(o.temp);
  c.seed = o.seed;
  c.validate();
  return c;
}

int cmd_train(const Options& o, const Given& g, std::ostream& out) {
  const GraphSpec spec = GraphSpec::by_name(o.spec);
  TrainConfig cfg = TrainConfig::for_spec(spec);
  cfg.seed = o.seed;  // GNVP_SEED or 0 unless the flag was given
  if (!o.config.empty()) cfg = TrainConfig::load(o.config, cfg);
  if (g.has(g.seed)) cfg.seed = o.seed;
  if (g.has(g.epochs)) cfg.epochs = o.epochs;
  if (g.has(g.batch_size)) cfg.batch_size = o.batch_size;
  cfg.validate();

  const Dataset data = load_dataset(o.dataset, spec);
  if (data.graphs.empty()) throw DataError("dataset '" + o.dataset + "' contains no molecules");
  TrainState state = o.checkpoint.empty() ? fresh_train_state(FlowModel(spec, FlowConfig::for_spec(spec), cfg.seed))
                                          : load_train_state(o.checkpoint, spec);
  const fs::path dir = output_dir(o);
  write_file(dir / "train_config.txt", cfg.to_text());
  TrainOptions opts;
  opts.metrics_path = dir / "train_log.csv";
  opts.checkpoint_dir = dir;
  opts.on_epoch = [&out](const EpochMetrics& m) {
    out << "epoch " << m.epoch << " mean_nll " << fixed(m.mean_nll, 6) << " sigma " << fixed(m.sigma, 6) << "\n";
  };
  train(state, data.graphs, cfg, opts);
  out << "wrote " << (dir / "model.gnvp").string() << "\n";
  return kOk;
}

int cmd_generate(const Options& o, const Given& g, std::ostream& out) {
  const FlowModel model = load_model(o, g);
  const SampleConfig cfg = sample_config(o, g, model.spec());
  const std::vector<GeneratedSample> samples = generate(model, cfg);
  const fs::path dir = output_dir(o);
  write_file(dir / "generated.smi", format_generated(samples));
  const auto valid = std::count_if(samples.begin(), samples.end(), [](const GeneratedSample& s) { return s.valid; });
  out << "generated " << samples.size() << " samples, " << valid << " valid\n";
  return kOk;
}

int cmd_eval(const Options& o, const Given& g, std::ostream& out) {
  const FlowModel model = load_model(o, g);
  const SampleConfig cfg = sample_config(o, g, model.spec());
  const Dataset data = load_dataset(o.dataset, model.spec());
  const ReferenceSet reference = ReferenceSet::build(data.graphs, model.spec());
  const std::vector<GeneratedSample> samples = generate(model, cfg);
  const MetricsReport r = compute_metrics(samples, reference, model, cfg.seed);
  const fs::path dir = output_dir(o);
  write_file(dir / "generated.smi", format_generated(samples));
  write_file(dir / "metrics.csv", metrics_csv_header() + metrics_csv_row(cfg.temperature, r, 1));
  out << "      %V      %N      %U      %R\n";
  out << " " << fixed(r.validity, 2) << "  " << fixed(r.novelty, 2) << "  " << fixed(r.uniqueness, 2) << "  "
      << fixed(r.reconstruction, 2) << "\n";
  out << "(" << r.valid << "/" << r.total << " valid, " << r.novel << " novel, " << r.unique << " unique, "
      << r.reconstructed << "/" << r.reconstruction_total << " reconstructed)\n";
  return kOk;
}

int cmd_encode(const Options& o, const Given& g, std::ostream& out) {
  const FlowModel model = load_model(o, g);
  const Dataset data = load_dataset(o.dataset, model.spec());
  std::string csv = "index,smiles,logdet";
  for (std::size_t k = 0; k < model.latent_dim(); ++k) csv += ",z" + std::to_string(k);
  csv += "\n";
  for (std::size_t i = 0; i < data.graphs.size(); ++i) {
    const LatentPoint p = encode(model, data.graphs[i]);
    csv += std::to_string(i) + "," + data.smiles[i] + "," + full(p.logdet);
    for (Real v : p.z.data()) csv += "," + full(v);
    csv += "\n";
  }
  const fs::path dir = output_dir(o);
  write_file(dir / "latents.csv", csv);
  out << "encoded " << data.graphs.size() << " molecules\n";
  return kOk;
}

const MolecularGraph& pick_center(const Dataset& data, std::size_t index) {
  if (index >= data.graphs.size()) {
    throw InvalidArgument("--center " + std::to_string(index) + " is out of range for a dataset of " +
                          std::to_string(data.graphs.size()) + " molecules");
  }
  return data.graphs[index];
}

int cmd_grid(const Options& o, const Given& g, std::ostream& out) {
  const FlowModel model = load_model(o, g);
  const Dataset data = load_dataset(o.dataset, model.spec());
  const GridSpec grid =
      GridSpec::random(model, pick_center(data, o.center), o.extent, static_cast<Real>(o.step_size), o.seed);
  const std::vector<GridCell> cells = grid_decode(model, grid);
  const fs::path dir = output_dir(o);
  write_file(dir / "grid.csv", grid_csv(cells));
  const auto valid = std::count_if(cells.begin(), cells.end(), [](const GridCell& c) { return c.sample.valid; });
  out << "centre " << data.smiles[o.center] << ": " << valid << "/" << cells.size() << " valid cells\n";
  return kOk;
}

int cmd_optimize(const Options& o, const Given& g, std::ostream& out) {
  const FlowModel model = load_model(o, g);
  const Dataset data = load_dataset(o.dataset, model.spec());
  const PropertyRegressor reg = fit_regressor(model, data.graphs, o.property);
  const std::vector<OptimizationStep> steps =
      optimize_along(model, reg, pick_center(data, o.center), o.steps, static_cast<Real>(o.step_size));
  const fs::path dir = output_dir(o);
  write_file(dir / "optimize.csv", optimization_csv(steps));
  out << "regressor for " << reg.property << ": R^2 " << fixed(reg.r_squared, 6)
      << (reg.ridge ? " (ridge fallback, lambda 1e-6)" : " (least squares)") << "\n";
  return kOk;
}

int cmd_sweep(const Options& o, const Given& g, std::ostream& out) {
  const FlowModel model = load_model(o, g);
  const Dataset data = load_dataset(o.dataset, model.spec());
  const ReferenceSet reference = ReferenceSet::build(data.graphs, model.spec());
  const SampleConfig base = sample_config(o, g, model.spec());
  std::vector<Real> temps(o.temps.begin(), o.temps.end());
  const std::vector<SweepRow> rows = temperature_sweep(model, temps, base, reference);
  const fs::path dir = output_dir(o);
  const std::string csv = sweep_csv(rows);
  write_file(dir / "sweep.csv", csv);
  out << csv;
  return kOk;
}

std::string one_line(std::string s) {
  for (char& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

int fail(std::ostream& err, int code, std::string_view kind, const std::string& message) {
  err << "gnvp: error: " << kind << ": " << one_line(message) << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  if (const char* env = std::getenv("GNVP_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      o.seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::logic_error&) {
      return fail(err, kUsage, "usage", std::string("GNVP_SEED is not an unsigned integer: '") + env + "'");
    }
  }

  CLI::App app{"Invertible flow model for molecular graphs", "gnvp"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  Given given;

  auto add_seed = [&](CLI::App* c) {
    given.seed = c->add_option("--seed", o.seed, "Random seed (falls back to GNVP_SEED)");
  };
  auto add_threads = [&](CLI::App* c) {
    c->add_option("--threads", o.threads, "Worker thread cap (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  };
  auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "Output directory"); };
  auto add_dataset = [&](CLI::App* c) {
    c->add_option("--dataset", o.dataset, "SMILES-lite dataset file")->required()->check(CLI::ExistingFile);
  };
  auto add_checkpoint = [&](CLI::App* c, bool required) {
    auto* opt = c->add_option("--checkpoint", o.checkpoint,
                              required ? "Model checkpoint" : "Training snapshot to resume from");
    opt->check(CLI::ExistingFile);
    if (required) opt->required();
  };
  auto add_spec = [&](CLI::App* c) {
    given.spec = c->add_option("--spec", o.spec, "Graph spec")->check(CLI::IsMember({"qm9lite", "zinclite"}));
  };
  auto add_sampling = [&](CLI::App* c) {
    c->add_option("--samples", o.samples, "Number of latent samples")->check(CLI::PositiveNumber);
    given.temp = c->add_option("--temp", o.temp, "Sampling temperature (0.75 for zinclite)")
                     ->check(CLI::PositiveNumber);
  };

  CLI::App* train = app.add_subcommand("train", "Fit a model by maximum likelihood");
  add_dataset(train);
  add_checkpoint(train, false);
  add_out(train);
  add_seed(train);
  add_spec(train);
  given.epochs = train->add_option("--epochs", o.epochs, "Training epochs");
  given.batch_size =
      train->add_option("--batch-size", o.batch_size, "Minibatch size (128 for zinclite)")->check(CLI::PositiveNumber);
  train->add_option("--config", o.config, "key=value training config; flags win")->check(CLI::ExistingFile);
  add_threads(train);

  CLI::App* gen = app.add_subcommand("generate", "Sample molecules from a trained model");
  add_checkpoint(gen, true);
  add_out(gen);
  add_seed(gen);
  add_spec(gen);
  add_sampling(gen);
  add_threads(gen);

  CLI::App* eval = app.add_subcommand("eval", "Validity, novelty, uniqueness and reconstruction");
  add_checkpoint(eval, true);
  add_dataset(eval);
  add_out(eval);
  add_seed(eval);
  add_spec(eval);
  add_sampling(eval);
  add_threads(eval);

  CLI::App* enc = app.add_subcommand("encode", "Noise-free latent vectors of a dataset");
  add_checkpoint(enc, true);
  add_dataset(enc);
  add_out(enc);
  add_spec(enc);
  add_threads(enc);

  CLI::App* grid = app.add_subcommand("grid", "Decode a 2-D latent grid around one molecule");
  add_checkpoint(grid, true);
  add_dataset(grid);
  add_out(grid);
  add_seed(grid);
  add_spec(grid);
  grid->add_option("--center", o.center, "Dataset index of the centre molecule");
  grid->add_option("--extent", o.extent, "Cells on each side of the centre");
  grid->add_option("--step-size", o.step_size, "Latent distance between cells")->check(CLI::PositiveNumber);
  add_threads(grid);

  CLI::App* opt = app.add_subcommand("optimize", "Walk the latent space along a property regressor");
  add_checkpoint(opt, true);
  add_dataset(opt);
  add_out(opt);
  add_spec(opt);
  opt->add_option("--property", o.property, "Property to increase")
      ->check(CLI::IsMember(property_names()));
  opt->add_option("--steps", o.steps, "Number of steps");
  opt->add_option("--step-size", o.step_size, "Latent distance per step")->check(CLI::PositiveNumber);
  opt->add_option("--center", o.center, "Dataset index of the starting molecule");
  add_threads(opt);

  CLI::App* sweep = app.add_subcommand("sweep", "Metrics across sampling temperatures");
  add_checkpoint(sweep, true);
  add_dataset(sweep);
  add_out(sweep);
  add_seed(sweep);
  add_spec(sweep);
  add_sampling(sweep);
  sweep->add_option("--temps", o.temps, "Temperatures to evaluate")->delimiter(',')->check(CLI::PositiveNumber);
  add_threads(sweep);

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << app.help();
    return fail(err, kUsage, "usage", e.what());
  }

  if (o.threads > 0) kernels::set_max_threads(o.threads);
  try {
    if (train->parsed()) return cmd_train(o, given, out);
    if (gen->parsed()) return cmd_generate(o, given, out);
    if (eval->parsed()) return cmd_eval(o, given, out);
    if (enc->parsed()) return cmd_encode(o, given, out);
    if (grid->parsed()) return cmd_grid(o, given, out);
    if (opt->parsed()) return cmd_optimize(o, given, out);
    if (sweep->parsed()) return cmd_sweep(o, given, out);
  } catch (const InvalidArgument& e) {
    return fail(err, kUsage, "usage", e.what());
  } catch (const NumericError& e) {
    return fail(err, kNumeric, "numeric", e.what());
  } catch (const std::exception& e) {
    return fail(err, kData, "data", e.what());
  }
  return fail(err, kUsage, "usage", "no subcommand");
}

}  // namespace gnvp::cli
