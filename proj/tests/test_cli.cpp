// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <limits>
#include <sstream>

#include "gnvp/checkpoint.hpp"
#include "gnvp/cli.hpp"
#include "gnvp/training.hpp"
#include "support.hpp"

using namespace gnvp;
namespace t = gnvp::testing;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "gnvp");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string corpus() { return t::data_path("qm9lite.smi").string(); }

// Last line of stderr, which carries the machine-readable error.
std::string last_line(const std::string& text) {
  std::string s = text;
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s.substr(s.rfind('\n') == std::string::npos ? 0 : s.rfind('\n') + 1);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help lists every flag with its default") {
    const Result top = run({"--help"});
    CHECK(top.code == 0);
    for (const char* sub : {"train", "generate", "eval", "encode", "grid", "optimize", "sweep"}) {
      CHECK(top.out.find(sub) != std::string::npos);
    }
    const Result train = run({"train", "--help"});
    CHECK(train.code == 0);
    for (const char* flag : {"--dataset", "--checkpoint", "--out", "--seed", "--spec", "--epochs", "--batch-size",
                             "--config", "--threads"}) {
      CHECK(train.out.find(flag) != std::string::npos);
    }
    CHECK(train.out.find("[200]") != std::string::npos);
    CHECK(train.out.find("[256]") != std::string::npos);
    const Result eval = run({"eval", "--help"});
    CHECK(eval.out.find("[0.85]") != std::string::npos);
    CHECK(eval.out.find("[1000]") != std::string::npos);
    const Result opt = run({"optimize", "--help"});
    for (const char* flag : {"--property", "--steps", "--step-size"}) CHECK(opt.out.find(flag) != std::string::npos);
    CHECK(opt.out.find("[logp_proxy]") != std::string::npos);
  }

  TEST_CASE("usage errors exit 1 with a single-line prefix") {
    const Result unknown = run({"generate", "--checkpoint", corpus(), "--bogus"});
    CHECK(unknown.code == 1);
    CHECK(last_line(unknown.err).rfind("gnvp: error: usage: ", 0) == 0);
    CHECK(unknown.err.find("Usage:") != std::string::npos);
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"train", "--dataset", "/nonexistent.smi"}).code == 1);
    CHECK(run({"train", "--dataset", corpus(), "--spec", "qm9"}).code == 1);
    CHECK(run({"eval", "--checkpoint", corpus(), "--dataset", corpus(), "--temp", "-1"}).code == 1);
  }

  TEST_CASE("data errors exit 2") {
    t::TempDir dir("cli_data");
    {
      std::ofstream f(dir / "bad.smi");
      f << "C\nCC\nC1CC\n";
    }
    const Result r = run({"train", "--dataset", (dir / "bad.smi").string(), "--epochs", "0", "--out", dir.path().string()});
    CHECK(r.code == 2);
    CHECK(last_line(r.err).rfind("gnvp: error: data: ", 0) == 0);
    CHECK(r.err.find("line 3") != std::string::npos);
    // A dataset file passed as a checkpoint.
    const Result c = run({"generate", "--checkpoint", corpus(), "--out", dir.path().string()});
    CHECK(c.code == 2);
  }

  TEST_CASE("numeric failures exit 3") {
    t::TempDir dir("cli_numeric");
    const GraphSpec spec = GraphSpec::qm9lite();
    TrainState state = fresh_train_state(FlowModel(spec, t::small_config(spec), 0));
    state.model.params().get(FlowModel::kLogSigma).data()[0] = std::numeric_limits<Real>::quiet_NaN();
    save_train_state(state, dir / "nan.gnvp");
    const Result r = run({"train", "--dataset", corpus(), "--checkpoint", (dir / "nan.gnvp").string(), "--epochs", "1",
                          "--out", dir.path().string()});
    CHECK(r.code == 3);
    CHECK(last_line(r.err).rfind("gnvp: error: numeric: ", 0) == 0);
  }

  TEST_CASE("zero-epoch training writes the zero-init model") {
    t::TempDir dir("cli_zero");
    const Result r = run({"train", "--dataset", corpus(), "--epochs", "0", "--seed", "17", "--out", dir.path().string()});
    REQUIRE(r.code == 0);
    const FlowModel loaded = load_checkpoint(dir / "model.gnvp", GraphSpec::qm9lite());
    const FlowModel fresh(GraphSpec::qm9lite(), FlowConfig::for_spec(GraphSpec::qm9lite()), 17);
    CHECK(loaded.params() == fresh.params());
    CHECK(loaded.buffers() == fresh.buffers());
  }

  TEST_CASE("config file with flag overrides") {
    t::TempDir dir("cli_config");
    {
      std::ofstream f(dir / "train.cfg");
      f << "epochs = 5\nbatch_size = 32\nseed = 4\n";
    }
    const Result r = run({"train", "--dataset", corpus(), "--config", (dir / "train.cfg").string(), "--epochs", "0",
                          "--out", dir.path().string()});
    REQUIRE(r.code == 0);
    const TrainConfig used = TrainConfig::load(dir / "train_config.txt", TrainConfig{});
    CHECK(used.epochs == 0);
    CHECK(used.batch_size == 32);
    CHECK(used.seed == 4);
    {
      std::ofstream f(dir / "bad.cfg");
      f << "epoch = 5\n";
    }
    CHECK(run({"train", "--dataset", corpus(), "--config", (dir / "bad.cfg").string(), "--out", dir.path().string()})
              .code == 1);
  }

  TEST_CASE("every subcommand runs and is reproducible") {
    t::TempDir dir("cli_all");
    const std::string model = (dir / "m.gnvp").string();
    save_checkpoint(t::trained_small_model(), model);
    auto both = [&](std::vector<std::string> args, const std::string& file) {
      const std::string a = (dir / "a").string(), b = (dir / "b").string();
      std::vector<std::string> first = args, second = args;
      first.insert(first.end(), {"--out", a});
      second.insert(second.end(), {"--out", b});
      const Result ra = run(first), rb = run(second);
      REQUIRE(ra.code == 0);
      REQUIRE(rb.code == 0);
      CHECK(ra.out == rb.out);
      const std::string text = read_text(std::filesystem::path(a) / file);
      CHECK_FALSE(text.empty());
      CHECK(text == read_text(std::filesystem::path(b) / file));
      return std::make_pair(text, ra.out);
    };

    const auto [generated, gen_out] = both({"generate", "--checkpoint", model, "--samples", "30", "--seed", "3"}, "generated.smi");
    CHECK(std::count(generated.begin(), generated.end(), '\n') == 30);

    const auto [metrics, eval_out] =
        both({"eval", "--checkpoint", model, "--dataset", corpus(), "--samples", "30", "--temp", "0.85"}, "metrics.csv");
    CHECK(metrics.rfind("temp,validity,novelty,uniqueness,reconstruction,seed_count\n0.85,", 0) == 0);
    CHECK(eval_out.find("%V") != std::string::npos);
    CHECK(eval_out.find("%R") != std::string::npos);
    CHECK(metrics.find(",100.0000,1\n") != std::string::npos);

    const auto [latents, enc_out] = both({"encode", "--checkpoint", model, "--dataset", corpus()}, "latents.csv");
    CHECK(std::count(latents.begin(), latents.end(), '\n') == 257);

    const auto [grid, grid_out] =
        both({"grid", "--checkpoint", model, "--dataset", corpus(), "--center", "4", "--extent", "1"}, "grid.csv");
    CHECK(std::count(grid.begin(), grid.end(), '\n') == 10);

    const auto [trace, opt_out] = both(
        {"optimize", "--checkpoint", model, "--dataset", corpus(), "--property", "ring_count", "--steps", "3"},
        "optimize.csv");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 5);

    const auto [sweep, sweep_out] =
        both({"sweep", "--checkpoint", model, "--dataset", corpus(), "--samples", "10", "--temps", "0.9,0.3"}, "sweep.csv");
    CHECK(sweep.find("\n0.3,") < sweep.find("\n0.9,"));
    CHECK(sweep.find(",5\n") != std::string::npos);

    CHECK(run({"grid", "--checkpoint", model, "--dataset", corpus(), "--center", "999", "--out", dir.path().string()})
              .code == 1);
  }

  TEST_CASE("GNVP_SEED is the seed fallback") {
    t::TempDir dir("cli_env");
    const std::string model = (dir / "m.gnvp").string();
    save_checkpoint(t::trained_small_model(), model);
    const std::string out = dir.path().string();
    auto gen = [&](std::vector<std::string> extra) {
      std::vector<std::string> args{"generate", "--checkpoint", model, "--samples", "20", "--out", out};
      args.insert(args.end(), extra.begin(), extra.end());
      REQUIRE(run(args).code == 0);
      return read_text(dir / "generated.smi");
    };
    ::setenv("GNVP_SEED", "12", 1);
    const std::string from_env = gen({});
    ::unsetenv("GNVP_SEED");
    CHECK(from_env == gen({"--seed", "12"}));
    ::setenv("GNVP_SEED", "twelve", 1);
    CHECK(run({"generate", "--checkpoint", model}).code == 1);
    ::unsetenv("GNVP_SEED");
  }
}
