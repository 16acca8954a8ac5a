// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/training.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gnvp/checkpoint.hpp"
#include "gnvp/error.hpp"

namespace gnvp {

TrainConfig TrainConfig::for_spec(const GraphSpec& spec) {
  TrainConfig c;
  if (spec.name() == "zinclite") c.batch_size = 128;
  return c;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw InvalidArgument("TrainConfig: batch_size must be positive");
  if (!(adam_alpha > 0)) throw InvalidArgument("TrainConfig: adam_alpha must be positive");
  if (!(adam_beta1 > 0 && adam_beta1 < 1)) throw InvalidArgument("TrainConfig: adam_beta1 must lie in (0,1)");
  if (!(adam_beta2 > 0 && adam_beta2 < 1)) throw InvalidArgument("TrainConfig: adam_beta2 must lie in (0,1)");
  if (!(adam_eps > 0)) throw InvalidArgument("TrainConfig: adam_eps must be positive");
  if (!(dequant_c > 0 && dequant_c < 1)) throw InvalidArgument("TrainConfig: dequant_c must lie in (0,1)");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, std::size_t line) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw InvalidArgument("config line " + std::to_string(line) + ": bad value '" + std::string(value) + "' for " +
                          std::string(key));
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TrainConfig TrainConfig::parse(std::string_view text, TrainConfig c) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t end = text.find('\n');
    std::string_view line = trim(text.substr(0, end));
    text = end == std::string_view::npos ? std::string_view() : text.substr(end + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "epochs") {
      c.epochs = parse_number<std::size_t>(key, value, line_no);
    } else if (key == "batch_size") {
      c.batch_size = parse_number<std::size_t>(key, value, line_no);
    } else if (key == "adam_alpha") {
      c.adam_alpha = parse_number<Real>(key, value, line_no);
    } else if (key == "adam_beta1") {
      c.adam_beta1 = parse_number<Real>(key, value, line_no);
    } else if (key == "adam_beta2") {
      c.adam_beta2 = parse_number<Real>(key, value, line_no);
    } else if (key == "adam_eps") {
      c.adam_eps = parse_number<Real>(key, value, line_no);
    } else if (key == "seed") {
      c.seed = parse_number<std::uint64_t>(key, value, line_no);
    } else if (key == "dequant_c") {
      c.dequant_c = parse_number<Real>(key, value, line_no);
    } else if (key == "checkpoint_every") {
      c.checkpoint_every = parse_number<std::size_t>(key, value, line_no);
    } else {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), base);
}

std::string TrainConfig::to_text() const {
  std::string s;
  s += "epochs = " + std::to_string(epochs) + "\n";
  s += "batch_size = " + std::to_string(batch_size) + "\n";
  s += "adam_alpha = " + format_real(adam_alpha) + "\n";
  s += "adam_beta1 = " + format_real(adam_beta1) + "\n";
  s += "adam_beta2 = " + format_real(adam_beta2) + "\n";
  s += "adam_eps = " + format_real(adam_eps) + "\n";
  s += "seed = " + std::to_string(seed) + "\n";
  s += "dequant_c = " + format_real(dequant_c) + "\n";
  s += "checkpoint_every = " + std::to_string(checkpoint_every) + "\n";
  return s;
}

AdamState AdamState::zeros_like(const ParameterSet& params) {
  AdamState a;
  for (const std::string& name : params.names()) {
    a.m.add(name, Tensor(params.get(name).shape()));
    a.v.add(name, Tensor(params.get(name).shape()));
  }
  return a;
}

TrainState fresh_train_state(FlowModel model) {
  AdamState adam = AdamState::zeros_like(model.params());
  return TrainState{std::move(model), std::move(adam), 0};
}

ad::Var nll_loss(const NetContext& ctx, const FlowModel& model, std::span<const DequantizedGraph> batch) {
  if (batch.empty()) throw InvalidArgument("nll_loss: empty batch");
  std::vector<Tensor> a, x, discrete;
  a.reserve(batch.size());
  x.reserve(batch.size());
  discrete.reserve(batch.size());
  for (const DequantizedGraph& g : batch) {
    a.push_back(g.adjacency);
    x.push_back(g.features);
    Tensor floor_a(g.adjacency.shape());
    for (std::size_t i = 0; i < floor_a.size(); ++i) floor_a[i] = std::floor(g.adjacency[i]);
    discrete.push_back(std::move(floor_a));
  }
  const FlowOutput out = model.forward(ctx, stack(a), stack(x), stack(discrete));
  const ad::Var log_sigma = ctx.param(FlowModel::kLogSigma);
  const ad::Var per_graph = ad::scale(ad::add(prior_logprob(log_sigma, out.z), out.logdet), Real(-1));
  return ad::scale(ad::sum_all(per_graph), Real(1) / static_cast<Real>(batch.size()));
}

ad::Var nll_loss(const NetContext& ctx, const FlowModel& model, std::span<const MolecularGraph> batch, Rng& rng,
                 Real c) {
  std::vector<DequantizedGraph> deq;
  deq.reserve(batch.size());
  for (const MolecularGraph& g : batch) {
    if (!g.matches(model.spec())) throw ShapeError("nll_loss: graph does not match spec '" + model.spec().name() + "'");
    deq.push_back(dequantize(g, c, rng));
  }
  return nll_loss(ctx, model, deq);
}

Real evaluate_nll(const FlowModel& model, std::span<const DequantizedGraph> batch) {
  ad::Tape tape(false);
  const NetContext ctx{tape, model.params(), model.buffers(), NormMode::kRunning};
  return nll_loss(ctx, model, batch).value().item();
}

void adam_step(ParameterSet& params, AdamState& adam, const ad::Gradients& grads, const TrainConfig& config) {
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) throw InvalidArgument("adam_step: gradient for unknown parameter '" + name + "'");
    if (g.shape() != params.get(name).shape()) {
      throw ShapeError("adam_step: gradient for '" + name + "' has shape " + shape_string(g.shape()) +
                       ", parameter has " + shape_string(params.get(name).shape()));
    }
  }
  ++adam.step;
  const Real b1 = config.adam_beta1, b2 = config.adam_beta2;
  const Real correct1 = 1 - std::pow(b1, static_cast<Real>(adam.step));
  const Real correct2 = 1 - std::pow(b2, static_cast<Real>(adam.step));
  for (const std::string& name : params.names()) {
    Tensor& p = params.get(name);
    Tensor& m = adam.m.get(name);
    Tensor& v = adam.v.get(name);
    const auto it = grads.find(name);
    const Tensor* g = it == grads.end() ? nullptr : &it->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Real gi = g != nullptr ? (*g)[i] : Real(0);
      m[i] = b1 * m[i] + (1 - b1) * gi;
      v[i] = b2 * v[i] + (1 - b2) * gi * gi;
      const Real m_hat = m[i] / correct1;
      const Real v_hat = v[i] / correct2;
      p[i] -= config.adam_alpha * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
  }
}

std::string metrics_header_comment(std::size_t latent_dim, Real c) {
  return "# mean_nll is per graph in nats and omits the constant -D*log(c) dequantization term (D=" +
         std::to_string(latent_dim) + ", c=" + format_real(c) + ", -D*log(c)=" +
         format_real(-static_cast<double>(latent_dim) * std::log(static_cast<double>(c))) + ")";
}

namespace {

std::vector<std::size_t> shuffled(std::size_t count, Rng& rng) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::string metrics_row(const EpochMetrics& e) {
  return std::to_string(e.epoch) + "," + format_real(e.mean_nll) + "," + format_real(e.sigma) + "," +
         format_real(e.wall_seconds);
}

}  // namespace

std::vector<EpochMetrics> train(TrainState& state, std::span<const MolecularGraph> dataset, const TrainConfig& config,
                                const TrainOptions& options) {
  config.validate();
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  FlowModel& model = state.model;
  for (const MolecularGraph& g : dataset) {
    if (!g.matches(model.spec())) throw DataError("train: dataset graph does not match spec '" + model.spec().name() + "'");
  }
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  std::ofstream metrics;
  if (!options.metrics_path.empty()) {
    const bool fresh = state.epoch == 0;
    metrics.open(options.metrics_path, fresh ? std::ios::trunc : std::ios::app);
    if (!metrics) throw DataError("cannot open metrics log '" + options.metrics_path.string() + "'");
    if (fresh) {
      metrics << metrics_header_comment(model.latent_dim(), config.dequant_c) << "\n";
      metrics << "epoch,mean_nll,sigma,wall_seconds\n";
    }
  }

  const Rng base(config.seed);
  std::vector<EpochMetrics> log;
  for (std::size_t epoch = state.epoch + 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng shuffle_rng = base.split(2 * epoch);
    Rng noise_rng = base.split(2 * epoch + 1);
    const std::vector<std::size_t> order = shuffled(dataset.size(), shuffle_rng);
    Real total = 0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<MolecularGraph> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(dataset[order[i]]);

      ad::Tape tape;
      BatchStatistics stats;
      const NetContext ctx{tape, model.params(), model.buffers(), NormMode::kBatch, &stats};
      Real loss_value = 0;
      ad::Gradients grads;
      try {
        const ad::Var loss = nll_loss(ctx, model, batch, noise_rng, config.dequant_c);
        loss_value = loss.value().item();
        grads = tape.backward(loss);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_index + 1) +
                           ": non-finite value in the loss (" + e.what() + ")");
      }
      if (!std::isfinite(loss_value)) {
        throw NumericError("epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_index + 1) +
                           ": non-finite loss");
      }
      adam_step(model.params(), state.adam, grads, config);
      update_running_statistics(model.buffers(), stats);
      total += loss_value * static_cast<Real>(batch.size());
    }
    state.epoch = epoch;

    EpochMetrics em;
    em.epoch = epoch;
    em.mean_nll = total / static_cast<Real>(dataset.size());
    em.sigma = std::exp(model.log_sigma());
    em.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log.push_back(em);
    if (metrics.is_open()) {
      metrics << metrics_row(em) << "\n";
      metrics.flush();
    }
    if (!options.checkpoint_dir.empty() && config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0) {
      save_train_state(state, options.checkpoint_dir / ("state_epoch_" + std::to_string(epoch) + ".gnvp"));
    }
    if (options.on_epoch) options.on_epoch(em);
  }
  if (!options.checkpoint_dir.empty()) save_checkpoint(model, options.checkpoint_dir / "model.gnvp");
  return log;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t count, std::uint64_t seed,
                                                                            Real train_fraction) {
  if (!(train_fraction > 0 && train_fraction <= 1)) throw InvalidArgument("split_indices: fraction must lie in (0,1]");
  Rng rng(seed);
  std::vector<std::size_t> order = shuffled(count, rng);
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<Real>(count)));
  std::vector<std::size_t> held(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  order.resize(cut);
  return {std::move(order), std::move(held)};
}

void save_train_state(const TrainState& state, const std::filesystem::path& path) {
  CheckpointContents c = model_contents(state.model);
  c.metadata["train.epoch"] = std::to_string(state.epoch);
  c.metadata["train.adam_step"] = std::to_string(state.adam.step);
  for (const std::string& name : state.adam.m.names()) c.tensors.emplace_back("adam.m/" + name, state.adam.m.get(name));
  for (const std::string& name : state.adam.v.names()) c.tensors.emplace_back("adam.v/" + name, state.adam.v.get(name));
  write_checkpoint_file(path, c);
}

TrainState load_train_state(const std::filesystem::path& path, const GraphSpec& expected) {
  const CheckpointContents c = read_checkpoint_file(path);
  TrainState state = fresh_train_state(model_from_contents(c, expected));
  state.epoch = static_cast<std::size_t>(std::stoull(c.meta("train.epoch")));
  state.adam.step = std::stoull(c.meta("train.adam_step"));
  for (const std::string& name : state.model.params().names()) {
    for (const char* kind : {"adam.m/", "adam.v/"}) {
      const Tensor* t = c.find(std::string(kind) + name);
      if (t == nullptr) {
        throw CheckpointError(CheckpointError::Kind::kMissingTensor,
                              "training snapshot is missing '" + std::string(kind) + name + "'");
      }
      Tensor& dst = kind[5] == 'm' ? state.adam.m.get(name) : state.adam.v.get(name);
      if (t->shape() != dst.shape()) {
        throw CheckpointError(CheckpointError::Kind::kSpecMismatch, "moment '" + std::string(kind) + name + "' has the wrong shape");
      }
      dst = *t;
    }
  }
  return state;
}

}  // namespace gnvp
