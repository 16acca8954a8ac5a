// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/generation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <optional>

#include "gnvp/error.hpp"

namespace gnvp {
namespace {

// Latents decoded per tape. Rows are independent, so the chunk size does not
// change any bits of the result.
constexpr std::size_t kChunk = 64;

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

// Exceptions must not escape an OpenMP region; keep the first and rethrow after.
class FirstError {
 public:
  template <typename F>
  void run(F&& body) {
    try {
      body();
    } catch (...) {
#pragma omp critical(gnvp_first_error)
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

SampleConfig SampleConfig::for_spec(const GraphSpec& spec) {
  SampleConfig c;
  if (spec.name() == "zinclite") c.temperature = Real(0.75);
  return c;
}

void SampleConfig::validate() const {
  if (num_samples == 0) throw InvalidArgument("SampleConfig: num_samples must be at least 1");
  if (!(temperature > 0)) throw InvalidArgument("SampleConfig: temperature must be positive");
}

Tensor sample_latent(Real log_sigma, std::size_t dim, Real temperature, Rng& rng) {
  const Real sd = temperature * std::exp(log_sigma);
  Tensor z(Shape{dim});
  for (Real& v : z.data()) v = sd * rng.normal();
  return z;
}

GeneratedSample make_sample(const MolecularGraph& graph, const GraphSpec& spec) {
  GeneratedSample s{graph, from_graph(graph, spec), false, {}};
  const ValidityReport report = check_validity(s.molecule, ValenceTable::standard());
  if (report.valid) {
    s.valid = true;
    s.canonical = write_smiles_canonical(s.molecule);
  }
  return s;
}

std::vector<GeneratedSample> decode_latents(const FlowModel& model, std::span<const Tensor> latents) {
  const GraphSpec& spec = model.spec();
  const std::size_t d = model.latent_dim();
  for (const Tensor& z : latents) {
    if (z.shape() != Shape{d}) {
      throw ShapeError("decode_latents: expected latent of shape " + shape_string(Shape{d}) + ", got " +
                       shape_string(z.shape()));
    }
  }
  std::vector<std::optional<GeneratedSample>> slots(latents.size());
  const auto chunks = static_cast<std::ptrdiff_t>(chunk_count(latents.size()));
  FirstError error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) error.run([&] {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(latents.size(), begin + kChunk);
    const auto [a, x] = inverse_batch(model, stack(latents.subspan(begin, end - begin)));
    for (std::size_t i = begin; i < end; ++i) {
      slots[i] = make_sample(discretize_argmax(unstack(a, i - begin), unstack(x, i - begin)), spec);
    }
  });
  error.rethrow();
  std::vector<GeneratedSample> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<GeneratedSample> generate(const FlowModel& model, const SampleConfig& config) {
  config.validate();
  const Rng base(config.seed);
  std::vector<Tensor> latents;
  latents.reserve(config.num_samples);
  for (std::size_t i = 0; i < config.num_samples; ++i) {
    Rng rng = base.split(i);
    latents.push_back(sample_latent(model.log_sigma(), model.latent_dim(), config.temperature, rng));
  }
  return decode_latents(model, latents);
}

ReferenceSet ReferenceSet::build(std::span<const MolecularGraph> graphs, const GraphSpec& spec) {
  ReferenceSet r;
  r.graphs.assign(graphs.begin(), graphs.end());
  for (const MolecularGraph& g : graphs) {
    const Molecule m = from_graph(g, spec);
    if (check_validity(m, ValenceTable::standard()).valid) r.canonical.insert(write_smiles_canonical(m));
  }
  return r;
}

MetricsReport generation_metrics(std::span<const GeneratedSample> generated, const ReferenceSet& reference) {
  MetricsReport r;
  r.total = generated.size();
  std::unordered_set<std::string> distinct;
  for (const GeneratedSample& s : generated) {
    if (!s.valid) continue;
    ++r.valid;
    if (reference.canonical.count(s.canonical) == 0) ++r.novel;
    distinct.insert(s.canonical);
  }
  r.unique = distinct.size();
  if (r.total > 0) r.validity = 100.0 * static_cast<double>(r.valid) / static_cast<double>(r.total);
  if (r.valid > 0) {
    r.novelty = 100.0 * static_cast<double>(r.novel) / static_cast<double>(r.valid);
    r.uniqueness = 100.0 * static_cast<double>(r.unique) / static_cast<double>(r.valid);
  }
  return r;
}

ReconstructionCount reconstruction_count(const FlowModel& model, std::span<const MolecularGraph> graphs,
                                         std::uint64_t seed, Real c) {
  const GraphSpec& spec = model.spec();
  const Rng base(seed);
  std::vector<char> matched(graphs.size(), 0);
  for (const MolecularGraph& g : graphs) {
    if (!g.matches(spec)) throw DataError("reconstruction: graph does not match spec '" + spec.name() + "'");
  }
  const auto chunks = static_cast<std::ptrdiff_t>(chunk_count(graphs.size()));
  FirstError error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ch = 0; ch < chunks; ++ch) error.run([&] {
    const std::size_t begin = static_cast<std::size_t>(ch) * kChunk;
    const std::size_t end = std::min(graphs.size(), begin + kChunk);
    std::vector<Tensor> a, x;
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = base.split(i);
      DequantizedGraph deq = dequantize(graphs[i], c, rng);
      a.push_back(std::move(deq.adjacency));
      x.push_back(std::move(deq.features));
    }
    const auto [z, logdet] = forward_batch(model, stack(a), stack(x));
    const auto [a_rec, x_rec] = inverse_batch(model, z);
    for (std::size_t i = begin; i < end; ++i) {
      try {
        matched[i] = requantize(unstack(a_rec, i - begin), unstack(x_rec, i - begin)) == graphs[i];
      } catch (const DataError&) {
        matched[i] = 0;
      }
    }
  });
  error.rethrow();
  ReconstructionCount r;
  r.total = graphs.size();
  r.matched = static_cast<std::size_t>(std::count(matched.begin(), matched.end(), 1));
  return r;
}

MetricsReport compute_metrics(std::span<const GeneratedSample> generated, const ReferenceSet& reference,
                              const FlowModel& model, std::uint64_t seed) {
  if (generated.empty()) throw InvalidArgument("compute_metrics: no generated samples");
  MetricsReport r = generation_metrics(generated, reference);
  const ReconstructionCount rc = reconstruction_count(model, reference.graphs, seed);
  r.reconstructed = rc.matched;
  r.reconstruction_total = rc.total;
  if (rc.total > 0) r.reconstruction = 100.0 * static_cast<double>(rc.matched) / static_cast<double>(rc.total);
  r.seed = seed;
  return r;
}

std::vector<SweepRow> temperature_sweep(const FlowModel& model, std::span<const Real> temperatures,
                                        const SampleConfig& base, const ReferenceSet& reference, std::size_t runs) {
  if (temperatures.empty()) throw InvalidArgument("temperature_sweep: no temperatures");
  if (runs == 0) throw InvalidArgument("temperature_sweep: runs must be positive");
  std::vector<Real> temps(temperatures.begin(), temperatures.end());
  for (Real t : temps) {
    if (!(t > 0)) throw InvalidArgument("temperature_sweep: temperatures must be positive");
  }
  std::sort(temps.begin(), temps.end());
  std::vector<SweepRow> rows;
  for (Real t : temps) {
    SweepRow row;
    row.temperature = t;
    row.seed_count = runs;
    for (std::size_t r = 0; r < runs; ++r) {
      SampleConfig cfg = base;
      cfg.temperature = t;
      cfg.seed = base.seed + r;
      const std::vector<GeneratedSample> samples = generate(model, cfg);
      const MetricsReport m = compute_metrics(samples, reference, model, cfg.seed);
      row.validity += m.validity;
      row.novelty += m.novelty;
      row.uniqueness += m.uniqueness;
      row.reconstruction += m.reconstruction;
    }
    const double n = static_cast<double>(runs);
    row.validity /= n;
    row.novelty /= n;
    row.uniqueness /= n;
    row.reconstruction /= n;
    rows.push_back(row);
  }
  return rows;
}

std::string metrics_csv_header() { return "temp,validity,novelty,uniqueness,reconstruction,seed_count\n"; }

std::string metrics_csv_row(Real temperature, const MetricsReport& r, std::size_t seed_count) {
  char t[32];
  std::snprintf(t, sizeof t, "%.4g", static_cast<double>(temperature));
  return std::string(t) + "," + format_percent(r.validity) + "," + format_percent(r.novelty) + "," +
         format_percent(r.uniqueness) + "," + format_percent(r.reconstruction) + "," + std::to_string(seed_count) +
         "\n";
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = metrics_csv_header();
  for (const SweepRow& row : rows) {
    MetricsReport r;
    r.validity = row.validity;
    r.novelty = row.novelty;
    r.uniqueness = row.uniqueness;
    r.reconstruction = row.reconstruction;
    out += metrics_csv_row(row.temperature, r, row.seed_count);
  }
  return out;
}

std::string format_generated(std::span<const GeneratedSample> samples) {
  std::string out;
  for (const GeneratedSample& s : samples) {
    if (s.valid) {
      out += s.canonical;
    } else if (s.molecule.atoms.empty()) {
      out += "# invalid (no atoms)";
    } else {
      out += "# invalid ";
      try {
        out += write_smiles(s.molecule);
      } catch (const DataError&) {
        out += "(not writable)";
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace gnvp
