// Command-line front end: `run` executes a configured experiment over its
// seeds, `verify` runs the numerical oracle suite, `bench --quick` smoke-
// tests the trainers on a synthetic stream.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lamaml/errors.hpp"
#include "lamaml/harness.hpp"
#include "lamaml/metrics.hpp"
#include "lamaml/verify.hpp"

namespace {

using nlohmann::ordered_json;

int cmd_run(const std::string& config_path, const std::string& seeds_csv, const std::string& out,
            bool timing) {
  lamaml::ExperimentConfig cfg = lamaml::parse_config(config_path);
  if (!seeds_csv.empty()) {
    cfg.seeds.clear();
    std::stringstream ss(seeds_csv);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (!token.empty()) cfg.seeds.push_back(std::stoull(token));
    }
    if (cfg.seeds.empty()) throw lamaml::ConfigError("--seeds parsed to an empty list");
  }
  if (!out.empty()) cfg.out = out;
  if (timing) cfg.timing = true;

  const lamaml::ExperimentResult result = lamaml::run_experiment(cfg);
  lamaml::emit_results(result.rows, result.records, cfg.out);
  std::cout << lamaml::results_csv(result.rows);

  for (const auto& row : result.rows) {
    if (!row.error.empty()) {
      std::cerr << ordered_json{{"error", "seed_failed"},
                                {"seed", row.seed},
                                {"message", row.error}}
                       .dump()
                << "\n";
      return 2;
    }
  }
  return 0;
}

int cmd_verify(const std::string& out_path) {
  ordered_json report;
  bool all_pass = true;

  ordered_json hyper = ordered_json::array();
  for (std::size_t k : {1, 2, 4, 10}) {
    const auto c = lamaml::check_hypergradient(k, 123);
    hyper.push_back({{"k", c.k}, {"max_rel_err", c.max_rel_err}, {"pass", c.pass}});
    all_pass &= c.pass;
  }
  report["hypergradient"] = std::move(hyper);

  ordered_json equiv = ordered_json::array();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto c = lamaml::check_equivalence_k1(seed);
    equiv.push_back({{"seed", seed},
                     {"alphas", c.alphas},
                     {"discrepancies", c.discrepancies},
                     {"ratios", c.ratios},
                     {"pass", c.pass}});
    all_pass &= c.pass;
  }
  report["equivalence_k1"] = std::move(equiv);

  const auto s = lamaml::check_sign_semantics();
  report["sign_semantics"] = {{"aligned_nonpositive", s.aligned_nonpositive},
                              {"orthogonal_zero", s.orthogonal_zero},
                              {"interfering_nonnegative", s.interfering_nonnegative},
                              {"update_moves_alpha", s.update_moves_alpha},
                              {"pass", s.pass}};
  all_pass &= s.pass;
  report["pass"] = all_pass;

  const std::string text = report.dump(2);
  std::cout << text << "\n";
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw lamaml::DataError("cannot write " + out_path);
    f << text << "\n";
  }
  return all_pass ? 0 : 3;
}

int cmd_bench(bool quick) {
  // Small synthetic-stream suite; --quick trims the task count further.
  lamaml::ExperimentConfig cfg;
  cfg.stream.benchmark = "synthetic";
  cfg.stream.tasks = quick ? 3 : 5;
  cfg.stream.n_per_task = quick ? 100 : 200;
  cfg.stream.batch_size = 10;
  cfg.stream.glances = 1;
  cfg.stream.dim = 16;
  cfg.stream.classes = 4;
  cfg.stream.separation = 3.0;
  cfg.hidden = {32, 32};
  cfg.seeds = {0, 1};
  cfg.timing = true;

  std::vector<lamaml::ResultRow> all;
  for (const char* algo : {"online", "er", "la_maml"}) {
    cfg.trainer = lamaml::TrainerConfig{};
    cfg.trainer.algorithm = lamaml::algorithm_from_string(algo);
    cfg.trainer.k = 5;
    cfg.trainer.lr = 0.1;
    cfg.trainer.alpha0 = 0.1;
    cfg.trainer.eta = 0.1;
    cfg.trainer.replay_capacity = 100;
    const auto result = lamaml::run_experiment(cfg);
    for (const auto& row : result.rows) {
      if (!row.error.empty()) {
        std::cerr << ordered_json{{"error", "bench_seed_failed"}, {"message", row.error}}.dump()
                  << "\n";
        return 2;
      }
    }
    all.insert(all.end(), result.rows.begin(), result.rows.end());
  }
  std::cout << lamaml::results_csv(all);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continual-learning benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, seeds_csv, out_dir, report_path;
  bool timing = false, quick = false;

  CLI::App* run = app.add_subcommand("run", "run a configured experiment");
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--seeds", seeds_csv, "comma-separated seed override");
  run->add_option("--out", out_dir, "output directory override");
  run->add_flag("--timing", timing, "report measured wall time in the CSV");

  CLI::App* verify = app.add_subcommand("verify", "run the numerical oracle suite");
  verify->add_option("--out", report_path, "also write the JSON report here");

  CLI::App* bench = app.add_subcommand("bench", "synthetic-stream smoke suite");
  bench->add_flag("--quick", quick, "smaller streams");

  const auto fail = [](const char* kind, const char* what) {
    std::cerr << ordered_json{{"error", kind}, {"message", what}}.dump() << "\n";
    return 1;
  };
  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(config_path, seeds_csv, out_dir, timing);
    if (verify->parsed()) return cmd_verify(report_path);
    if (bench->parsed()) return cmd_bench(quick);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const lamaml::ConfigError& e) {
    return fail("config", e.what());
  } catch (const lamaml::DataError& e) {
    return fail("data", e.what());
  } catch (const lamaml::NumericError& e) {
    return fail("numeric", e.what());
  } catch (const lamaml::ShapeError& e) {
    return fail("shape", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
