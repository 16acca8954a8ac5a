// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/latent.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "gnvp/error.hpp"

namespace gnvp {

LatentPoint encode(const FlowModel& model, const MolecularGraph& g, Rng* rng, Real c) {
  if (!g.matches(model.spec())) throw DataError("encode: graph does not match spec '" + model.spec().name() + "'");
  const DequantizedGraph deq = rng != nullptr ? dequantize(g, c, *rng) : dequantize_midpoint(g, c);
  return model_forward(model, deq);
}

GeneratedSample decode(const FlowModel& model, const Tensor& z) {
  const Reconstruction r = model_inverse(model, z);
  return make_sample(discretize_argmax(r.adjacency, r.features), model.spec());
}

namespace {

Real dot(const Tensor& a, const Tensor& b) {
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(Tensor& a) {
  const Real n = std::sqrt(dot(a, a));
  if (!(n > 0)) throw NumericError("grid axis has zero norm");
  for (Real& v : a.data()) v /= n;
}

// a <- a - <a,b> b for unit b.
void remove_component(Tensor& a, const Tensor& b) {
  const Real p = dot(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= p * b[i];
}

Tensor axis_point(const GridSpec& g, Real a, Real b) {
  Tensor z = g.center;
  for (std::size_t k = 0; k < z.size(); ++k) z[k] += a * g.axis_u[k] + b * g.axis_v[k];
  return z;
}

std::string smiles_or_invalid(const GeneratedSample& s) { return s.valid ? s.canonical : "INVALID"; }

std::string format_real(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", static_cast<double>(v));
  return buf;
}

}  // namespace

GridSpec GridSpec::random(const FlowModel& model, const MolecularGraph& center, std::size_t extent, Real step,
                          std::uint64_t seed) {
  if (!(step > 0)) throw InvalidArgument("GridSpec: step must be positive");
  const std::size_t d = model.latent_dim();
  if (d < 2) throw InvalidArgument("GridSpec: latent space needs at least two dimensions");
  GridSpec g;
  g.center = encode(model, center).z;
  g.extent = extent;
  g.step = step;
  Rng rng(seed);
  g.axis_u = Tensor(Shape{d});
  g.axis_v = Tensor(Shape{d});
  for (Real& v : g.axis_u.data()) v = rng.normal();
  for (Real& v : g.axis_v.data()) v = rng.normal();
  normalize(g.axis_u);
  // Two Gram-Schmidt passes keep the pair orthogonal to round-off.
  remove_component(g.axis_v, g.axis_u);
  normalize(g.axis_v);
  remove_component(g.axis_v, g.axis_u);
  normalize(g.axis_v);
  return g;
}

std::vector<GridCell> grid_decode(const FlowModel& model, const GridSpec& spec) {
  const long e = static_cast<long>(spec.extent);
  std::vector<Tensor> latents;
  std::vector<std::pair<long, long>> coords;
  for (long i = -e; i <= e; ++i) {
    for (long j = -e; j <= e; ++j) {
      coords.emplace_back(i, j);
      latents.push_back(i == 0 && j == 0 ? spec.center
                                         : axis_point(spec, static_cast<Real>(i) * spec.step,
                                                      static_cast<Real>(j) * spec.step));
    }
  }
  std::vector<GeneratedSample> samples = decode_latents(model, latents);
  std::vector<GridCell> cells;
  cells.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    cells.push_back(GridCell{coords[k].first, coords[k].second, std::move(samples[k])});
  }
  return cells;
}

std::string grid_csv(std::span<const GridCell> cells) {
  std::string out = "i,j,smiles\n";
  for (const GridCell& c : cells) {
    out += std::to_string(c.i) + "," + std::to_string(c.j) + "," + smiles_or_invalid(c.sample) + "\n";
  }
  return out;
}

const std::vector<std::string>& property_names() {
  static const std::vector<std::string> names{"heavy_atom_count", "ring_count", "hetero_fraction", "logp_proxy"};
  return names;
}

Real logp_contribution(std::string_view symbol) {
  if (symbol == "C") return Real(0.34);
  if (symbol == "N") return Real(-0.60);
  if (symbol == "O") return Real(-0.71);
  if (symbol == "F") return Real(0.22);
  if (symbol == "S") return Real(0.26);
  if (symbol == "Cl") return Real(0.61);
  throw DataError("logp_proxy: no contribution for atom '" + std::string(symbol) + "'");
}

Real compute_property(const Molecule& m, std::string_view name) {
  const auto& names = property_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw InvalidArgument("unknown property '" + std::string(name) + "'");
  }
  if (!check_validity(m, ValenceTable::standard()).valid) {
    throw DataError("property '" + std::string(name) + "' requested for an invalid molecule");
  }
  const Real atoms = static_cast<Real>(m.atoms.size());
  if (name == "heavy_atom_count") return atoms;
  if (name == "ring_count") {
    return static_cast<Real>(m.bonds.size()) - atoms + static_cast<Real>(m.component_count());
  }
  if (name == "hetero_fraction") {
    const auto hetero = std::count_if(m.atoms.begin(), m.atoms.end(), [](const std::string& s) { return s != "C"; });
    return static_cast<Real>(hetero) / atoms;
  }
  Real sum = 0;
  for (const std::string& s : m.atoms) sum += logp_contribution(s);
  return sum;
}

Real PropertyRegressor::predict(const Tensor& z) const {
  if (z.size() != weights.size()) throw ShapeError("PropertyRegressor::predict: latent dimension mismatch");
  return dot(weights, z) + bias;
}

PropertyRegressor fit_regressor(std::span<const Tensor> latents, std::span<const Real> values, std::string property) {
  using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
  if (latents.size() != values.size()) throw InvalidArgument("fit_regressor: latents and values differ in count");
  if (std::set<Real>(values.begin(), values.end()).size() < 2) {
    throw InvalidArgument("fit_regressor: property '" + property + "' needs at least two distinct values");
  }
  const std::size_t n = latents.size();
  const std::size_t d = latents.front().size();
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d + 1));
  Vector y(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    if (latents[r].size() != d) throw ShapeError("fit_regressor: latents differ in dimension");
    for (std::size_t k = 0; k < d; ++k) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = latents[r][k];
    x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) = 1;
    y(static_cast<Eigen::Index>(r)) = values[r];
  }

  PropertyRegressor reg;
  reg.property = std::move(property);
  reg.samples = n;
  Vector beta;
  const Eigen::ColPivHouseholderQR<Matrix> qr(x);
  if (qr.rank() == static_cast<Eigen::Index>(d + 1)) {
    beta = qr.solve(y);
  } else {
    // Ridge on centred data so the intercept is not shrunk.
    reg.ridge = true;
    const Vector mean_x = x.leftCols(static_cast<Eigen::Index>(d)).colwise().mean().transpose();
    const Real mean_y = y.mean();
    const Matrix xc = x.leftCols(static_cast<Eigen::Index>(d)).rowwise() - mean_x.transpose();
    Matrix gram = xc.transpose() * xc;
    gram.diagonal().array() += kRidgeLambda;
    const Vector w = gram.ldlt().solve(xc.transpose() * (y.array() - mean_y).matrix());
    beta.resize(static_cast<Eigen::Index>(d + 1));
    beta.head(static_cast<Eigen::Index>(d)) = w;
    beta(static_cast<Eigen::Index>(d)) = mean_y - mean_x.dot(w);
  }
  reg.weights = Tensor(Shape{d});
  for (std::size_t k = 0; k < d; ++k) reg.weights[k] = beta(static_cast<Eigen::Index>(k));
  reg.bias = beta(static_cast<Eigen::Index>(d));
  const Vector residual = y - x * beta;
  const Real ss_res = residual.squaredNorm();
  const Real ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
  reg.r_squared = 1 - ss_res / ss_tot;
  return reg;
}

PropertyRegressor fit_regressor(const FlowModel& model, std::span<const MolecularGraph> dataset,
                                std::string_view property) {
  if (dataset.empty()) throw InvalidArgument("fit_regressor: empty dataset");
  std::vector<Tensor> latents;
  std::vector<Real> values;
  for (const MolecularGraph& g : dataset) {
    values.push_back(compute_property(from_graph(g, model.spec()), property));
    latents.push_back(encode(model, g).z);
  }
  return fit_regressor(latents, values, std::string(property));
}

std::vector<OptimizationStep> optimize_along(const FlowModel& model, const PropertyRegressor& regressor,
                                             const MolecularGraph& seed, std::size_t num_steps, Real step_size) {
  if (!(step_size > 0)) throw InvalidArgument("optimize_along: step_size must be positive");
  if (regressor.weights.size() != model.latent_dim()) {
    throw ShapeError("optimize_along: regressor dimension does not match the model");
  }
  const Tensor z0 = encode(model, seed).z;
  Tensor dir = regressor.weights;
  normalize(dir);
  std::vector<Tensor> latents;
  for (std::size_t k = 0; k <= num_steps; ++k) {
    Tensor z = z0;
    const Real a = static_cast<Real>(k) * step_size;
    if (k > 0) {
      for (std::size_t i = 0; i < z.size(); ++i) z[i] += a * dir[i];
    }
    latents.push_back(std::move(z));
  }
  std::vector<GeneratedSample> samples = decode_latents(model, latents);
  std::vector<OptimizationStep> out;
  for (std::size_t k = 0; k <= num_steps; ++k) {
    std::optional<Real> realized;
    if (samples[k].valid) realized = compute_property(samples[k].molecule, regressor.property);
    out.push_back(OptimizationStep{k, std::move(samples[k]), regressor.predict(latents[k]), realized});
  }
  return out;
}

std::string optimization_csv(std::span<const OptimizationStep> steps) {
  std::string out = "step,smiles,predicted,realized\n";
  for (const OptimizationStep& s : steps) {
    out += std::to_string(s.step) + "," + smiles_or_invalid(s.sample) + "," + format_real(s.predicted) + "," +
           (s.realized ? format_real(*s.realized) : std::string("NA")) + "\n";
  }
  return out;
}

}  // namespace gnvp
