// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "gnvp/error.hpp"
#include "gnvp/generation.hpp"
#include "support.hpp"

using namespace gnvp;
namespace t = gnvp::testing;

namespace {

GeneratedSample sample_of(const std::string& smiles, const GraphSpec& spec) {
  return make_sample(to_graph(parse_smiles_lite(smiles), spec), spec);
}

GeneratedSample invalid_sample(const GraphSpec& spec) {
  // Two carbons joined by a triple bond plus a fluorine double-bonded to one of them.
  Molecule m;
  m.atoms = {"C", "C", "F"};
  m.bonds = {{0, 1, 3}, {1, 2, 2}};
  return make_sample(to_graph(m, spec), spec);
}

}  // namespace

TEST_SUITE("generation-eval") {
  TEST_CASE("sample config defaults") {
    CHECK(SampleConfig::for_spec(GraphSpec::qm9lite()).temperature == Real(0.85));
    CHECK(SampleConfig::for_spec(GraphSpec::zinclite()).temperature == Real(0.75));
    SampleConfig c;
    c.temperature = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  }

  TEST_CASE("temperature zero gives the zero latent") {
    Rng rng(1);
    const Tensor z = sample_latent(Real(0.3), 50, 0, rng);
    for (Real v : z.data()) CHECK(v == 0);
  }

  TEST_CASE("sampler variance is (T sigma)^2") {
    Rng rng(2);
    const std::size_t dim = 24, draws = 100000;
    std::vector<double> sum(dim, 0), sum_sq(dim, 0);
    for (std::size_t k = 0; k < draws; ++k) {
      const Tensor z = sample_latent(0, dim, Real(0.85), rng);
      for (std::size_t i = 0; i < dim; ++i) {
        sum[i] += z[i];
        sum_sq[i] += z[i] * z[i];
      }
    }
    for (std::size_t i = 0; i < dim; ++i) {
      const double mean = sum[i] / draws;
      const double var = sum_sq[i] / draws - mean * mean;
      CHECK(std::abs(var / 0.7225 - 1) < 0.02);
    }
  }

  TEST_CASE("same seed, same samples") {
    const FlowModel& model = t::trained_small_model();
    SampleConfig c;
    c.num_samples = 100;
    c.seed = 5;
    const auto a = generate(model, c), b = generate(model, c);
    REQUIRE(a.size() == 100);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].graph == b[i].graph);
  }

  TEST_CASE("decoding is independent of chunking") {
    const FlowModel& model = t::trained_small_model();
    SampleConfig c;
    c.num_samples = 150;
    c.seed = 6;
    const auto all = generate(model, c);
    Rng base(6);
    for (std::size_t i : {0UL, 63UL, 64UL, 149UL}) {
      Rng rng = base.split(i);
      const Tensor z = sample_latent(model.log_sigma(), model.latent_dim(), c.temperature, rng);
      const std::vector<Tensor> one{z};
      CHECK(decode_latents(model, one)[0].graph == all[i].graph);
    }
  }

  TEST_CASE("zero-init model at T = 0 decodes one deterministic graph") {
    const GraphSpec spec = GraphSpec::qm9lite();
    const FlowModel model(spec, FlowConfig::for_spec(spec), 0);
    Rng rng(3);
    std::vector<Tensor> latents;
    for (int k = 0; k < 10; ++k) latents.push_back(sample_latent(model.log_sigma(), model.latent_dim(), 0, rng));
    const auto samples = decode_latents(model, latents);
    for (const GeneratedSample& s : samples) CHECK(s.graph == samples.front().graph);
  }

  TEST_CASE("generated graphs satisfy the graph invariants") {
    const FlowModel& model = t::trained_small_model();
    SampleConfig c;
    c.num_samples = 1000;
    c.seed = 7;
    for (const GeneratedSample& s : generate(model, c)) {
      // Rebuilding from the tensors re-runs every one-hot and symmetry check.
      CHECK_NOTHROW(MolecularGraph::from_tensors(s.graph.adjacency_tensor(), s.graph.feature_tensor()));
      CHECK(s.valid == check_validity(s.molecule, ValenceTable::standard()).valid);
    }
  }

  TEST_CASE("training improves validity over the zero-init model") {
    const GraphSpec spec = GraphSpec::qm9lite();
    const ReferenceSet ref = ReferenceSet::build(t::qm9_corpus().graphs, spec);
    SampleConfig c;
    c.num_samples = 500;
    c.seed = 8;
    const MetricsReport trained = generation_metrics(generate(t::trained_small_model(), c), ref);
    const FlowModel untrained(spec, t::small_config(spec), 3);
    const MetricsReport base = generation_metrics(generate(untrained, c), ref);
    MESSAGE("validity trained " << trained.validity << "% vs zero-init " << base.validity << "%");
    CHECK(trained.validity > base.validity);
  }

  TEST_CASE("metrics on constructed fixtures") {
    const GraphSpec spec = GraphSpec::qm9lite();
    const ReferenceSet ref = ReferenceSet::build(t::qm9_corpus().graphs, spec);

    SUBCASE("training set verbatim") {
      std::vector<GeneratedSample> gen;
      for (const MolecularGraph& g : t::qm9_corpus().graphs) gen.push_back(make_sample(g, spec));
      gen.push_back(gen.front());
      const MetricsReport r = generation_metrics(gen, ref);
      CHECK(r.valid == 257);
      CHECK(r.novel == 0);
      CHECK(r.unique == 256);
      CHECK(r.validity == 100);
      CHECK(r.novelty == 0);
      CHECK(r.uniqueness == doctest::Approx(100.0 * 256 / 257));
    }
    SUBCASE("ten copies of one novel molecule") {
      const GeneratedSample s = sample_of("CCCCCCCCC", spec);
      REQUIRE(ref.canonical.count(s.canonical) == 0);
      const std::vector<GeneratedSample> gen(10, s);
      const MetricsReport r = generation_metrics(gen, ref);
      CHECK(r.validity == 100);
      CHECK(r.novelty == 100);
      CHECK(r.uniqueness == 10);
    }
    SUBCASE("mixed valid, invalid and empty") {
      std::vector<GeneratedSample> gen;
      gen.push_back(make_sample(t::qm9_corpus().graphs[0], spec));
      gen.push_back(sample_of("CCCCCCCCC", spec));
      gen.push_back(sample_of("CCCCCCCCC", spec));
      gen.push_back(invalid_sample(spec));
      gen.push_back(make_sample(MolecularGraph::empty(spec), spec));
      const MetricsReport r = generation_metrics(gen, ref);
      CHECK(r.total == 5);
      CHECK(r.valid == 3);
      CHECK(r.novel == 2);
      CHECK(r.unique == 2);
      CHECK(r.validity == 60);
      CHECK(r.novelty == doctest::Approx(200.0 / 3));
      CHECK(r.uniqueness == doctest::Approx(200.0 / 3));
    }
    SUBCASE("nothing valid") {
      const std::vector<GeneratedSample> gen{invalid_sample(spec)};
      const MetricsReport r = generation_metrics(gen, ref);
      CHECK(r.validity == 0);
      CHECK(r.novelty == 0);
      CHECK(r.uniqueness == 0);
    }
  }

  TEST_CASE("reconstruction is exact for any model") {
    const GraphSpec spec = GraphSpec::qm9lite();
    FlowModel model(spec, FlowConfig::for_spec(spec), 9);
    Rng rng(9);
    randomize_parameters(model, rng, Real(0.3));
    const ReconstructionCount r = reconstruction_count(model, t::qm9_corpus().graphs, 9);
    CHECK(r.total == 256);
    CHECK(r.matched == 256);
    const ReconstructionCount trained = reconstruction_count(t::trained_small_model(), t::qm9_corpus().graphs, 9);
    CHECK(trained.matched == 256);
  }

  TEST_CASE("compute_metrics needs samples") {
    const GraphSpec spec = GraphSpec::qm9lite();
    const ReferenceSet ref = ReferenceSet::build(t::qm9_corpus().graphs, spec);
    CHECK_THROWS_AS(compute_metrics({}, ref, t::trained_small_model(), 0), InvalidArgument);
  }

  TEST_CASE("temperature sweep") {
    const FlowModel& model = t::trained_small_model();
    const ReferenceSet ref = ReferenceSet::build(t::qm9_corpus().graphs, model.spec());
    SampleConfig base;
    base.num_samples = 40;
    base.seed = 20;

    SUBCASE("single temperature") {
      const std::vector<Real> temps{Real(0.5)};
      const auto rows = temperature_sweep(model, temps, base, ref, 1);
      REQUIRE(rows.size() == 1);
      CHECK(rows[0].temperature == Real(0.5));
      CHECK(rows[0].seed_count == 1);
      CHECK(rows[0].reconstruction == 100);
    }
    SUBCASE("rows ascend and average five seeded runs") {
      const std::vector<Real> temps{Real(0.9), Real(0.3), Real(0.6)};
      const auto rows = temperature_sweep(model, temps, base, ref);
      REQUIRE(rows.size() == 3);
      CHECK(rows[0].temperature == Real(0.3));
      CHECK(rows[2].temperature == Real(0.9));
      double v = 0, u = 0;
      for (std::uint64_t r = 0; r < kSweepRuns; ++r) {
        SampleConfig c = base;
        c.temperature = Real(0.6);
        c.seed = base.seed + r;
        const MetricsReport m = compute_metrics(generate(model, c), ref, model, c.seed);
        v += m.validity;
        u += m.uniqueness;
      }
      CHECK(rows[1].validity == doctest::Approx(v / kSweepRuns).epsilon(1e-12));
      CHECK(rows[1].uniqueness == doctest::Approx(u / kSweepRuns).epsilon(1e-12));
      CHECK(rows[1].seed_count == 5);
      const std::string csv = sweep_csv(rows);
      CHECK(csv.rfind("temp,validity,novelty,uniqueness,reconstruction,seed_count\n", 0) == 0);
      CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    }
    SUBCASE("uniqueness trend (soft)") {
      int holds = 0;
      for (std::uint64_t s = 0; s < 5; ++s) {
        SampleConfig c = base;
        c.num_samples = 100;
        double last = -1;
        bool ok = true;
        for (Real temp : {Real(0.3), Real(0.6), Real(0.9)}) {
          c.temperature = temp;
          c.seed = 100 + s;
          const double u = generation_metrics(generate(model, c), ref).uniqueness;
          ok = ok && u >= last;
          last = u;
        }
        holds += ok;
      }
      if (holds < 4) MESSAGE("warning: uniqueness non-decreasing in T for only " << holds << " of 5 seeds");
    }
    SUBCASE("bad input") {
      CHECK_THROWS_AS(temperature_sweep(model, {}, base, ref), InvalidArgument);
      const std::vector<Real> neg{Real(-1)};
      CHECK_THROWS_AS(temperature_sweep(model, neg, base, ref), InvalidArgument);
    }
  }

  TEST_CASE("generated file format") {
    const GraphSpec spec = GraphSpec::qm9lite();
    const std::vector<GeneratedSample> gen{sample_of("OCC", spec), invalid_sample(spec),
                                           make_sample(MolecularGraph::empty(spec), spec)};
    const std::string text = format_generated(gen);
    CHECK(text.substr(0, text.find('\n')) == write_smiles_canonical(parse_smiles_lite("CCO")));
    CHECK(text.find("\n# invalid ") != std::string::npos);
    CHECK(text.find("# invalid (no atoms)\n") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  }

  TEST_CASE("metrics csv row") {
    MetricsReport r;
    r.validity = 50;
    r.novelty = 12.5;
    r.uniqueness = 100;
    r.reconstruction = 100;
    CHECK(metrics_csv_row(Real(0.85), r, 1) == "0.85,50.0000,12.5000,100.0000,100.0000,1\n");
  }
}
