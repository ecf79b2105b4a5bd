#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lamaml/errors.hpp"
#include "lamaml/harness.hpp"
#include "lamaml/tasks.hpp"

using namespace lamaml;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("lamaml_harness_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  static inline int counter = 0;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kSyntheticConfig = R"({
  "benchmark": "synthetic",
  "tasks": 2,
  "n_per_task": 40,
  "synthetic": {"dim": 8, "classes": 3, "separation": 3.0},
  "hidden": [16],
  "trainer": {"algorithm": "la_maml", "k": 5, "alpha0": 0.1, "eta": 0.1, "replay_capacity": 40},
  "seeds": [0, 1]
})";

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("minimal config fills documented defaults") {
  const ExperimentConfig cfg = parse_config_json(R"({
    "benchmark": "synthetic",
    "trainer": {"algorithm": "online"}
  })");
  CHECK(cfg.stream.batch_size == 10);
  CHECK(cfg.stream.glances == 1);
  CHECK(cfg.trainer.clip == 2.0);
  CHECK(cfg.stream.protocol == Protocol::single_pass);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0});
  CHECK_FALSE(cfg.timing);
}

TEST_CASE("unknown keys are rejected with their path") {
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"benchmark": "synthetic", "trainer": {"algorithm":
    "online"}, "glancez": 5})"),
                       doctest::Contains("glancez"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_json(R"({"benchmark": "synthetic", "trainer": {"algorithm":
    "online", "alpha_zero": 0.1}})"),
                       doctest::Contains("trainer.alpha_zero"), ConfigError);
}

TEST_CASE("k must divide the batch size, and the error names both") {
  const char* bad = R"({
    "benchmark": "synthetic", "batch_size": 10,
    "trainer": {"algorithm": "la_maml", "k": 3}
  })";
  CHECK_THROWS_WITH_AS(parse_config_json(bad), doctest::Contains("k=3"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_json(bad), doctest::Contains("batch_size=10"), ConfigError);
}

TEST_CASE("published rotation hyperparameters round-trip") {
  const ExperimentConfig cfg = parse_config_json(R"({
    "benchmark": "synth_rotations",
    "tasks": 20, "n_per_task": 200, "glances": 5, "batch_size": 10,
    "trainer": {"algorithm": "la_maml", "k": 10, "alpha0": 0.3, "eta": 0.15,
                "replay_capacity": 200}
  })");
  CHECK(cfg.trainer.alpha0 == 0.3);
  CHECK(cfg.trainer.eta == 0.15);
  CHECK(cfg.stream.glances == 5);
  CHECK(cfg.trainer.k == 10);
  CHECK(cfg.trainer.meta_mode == MetaLossMode::all_steps);
}

TEST_CASE("IDX benchmarks demand existing data files") {
  ::unsetenv("LAMAML_DATA_DIR");
  CHECK_THROWS_WITH_AS(parse_config_json(R"({
    "benchmark": "rotations", "data_dir": "/nonexistent-dir",
    "trainer": {"algorithm": "online"}
  })"),
                       doctest::Contains("missing data file"), ConfigError);

  // the env var override wins over the config path
  TempDir tmp;
  std::ofstream(tmp.path / "train-images-idx3-ubyte").put('x');
  std::ofstream(tmp.path / "train-labels-idx1-ubyte").put('x');
  ::setenv("LAMAML_DATA_DIR", tmp.path.c_str(), 1);
  CHECK_NOTHROW(parse_config_json(R"({
    "benchmark": "rotations", "data_dir": "/nonexistent-dir",
    "trainer": {"algorithm": "online"}
  })"));
  ::unsetenv("LAMAML_DATA_DIR");
}

TEST_CASE("invalid protocol and epochs combinations are rejected") {
  CHECK_THROWS_AS(parse_config_json(R"({"benchmark": "synthetic", "protocol": "sometimes",
    "trainer": {"algorithm": "online"}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"benchmark": "synthetic", "epochs": 3,
    "trainer": {"algorithm": "online"}})"),
                  ConfigError);
}

TEST_CASE("run_experiment yields per-seed rows plus a summary") {
  const ExperimentConfig cfg = parse_config_json(kSyntheticConfig);
  const ExperimentResult r = run_experiment(cfg);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].seed == "0");
  CHECK(r.rows[1].seed == "1");
  CHECK(r.rows[2].seed == "mean±std");
  for (const auto& row : r.rows) {
    REQUIRE(row.error.empty());
    REQUIRE(row.ra.has_value());
    CHECK(*row.ra >= 0.0);
    CHECK(*row.ra <= 100.0);
  }
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].completed);
}

TEST_CASE("identical config and seed give byte-identical CSV") {
  const ExperimentConfig cfg = parse_config_json(kSyntheticConfig);
  const ExperimentResult a = run_experiment(cfg);
  const ExperimentResult b = run_experiment(cfg);
  CHECK(results_csv(a.rows) == results_csv(b.rows));
}

TEST_CASE("emit_results writes the pinned CSV header and JSONL records") {
  TempDir tmp;
  SUBCASE("empty rows give a header-only CSV") {
    emit_results({}, {}, tmp.path.string());
    CHECK(slurp(tmp.path / "results.csv") ==
          "algorithm,benchmark,seed,ra,bti,alignment,wall_time_s\n");
  }
  SUBCASE("real rows re-emit byte-identically") {
    const ExperimentConfig cfg = parse_config_json(kSyntheticConfig);
    const ExperimentResult r = run_experiment(cfg);
    emit_results(r.rows, r.records, tmp.path.string());
    const std::string csv1 = slurp(tmp.path / "results.csv");
    emit_results(r.rows, r.records, tmp.path.string());
    CHECK(slurp(tmp.path / "results.csv") == csv1);
    CHECK(csv1.find("la_maml,synthetic,0,") != std::string::npos);
    // one JSONL line per seed with the accuracy matrix
    std::ifstream jl(tmp.path / "records.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(jl, line)) {
      ++lines;
      CHECK(line.find("\"acc\"") != std::string::npos);
    }
    CHECK(lines == 2);
  }
}

TEST_CASE("IDX-backed rotation benchmark runs end to end") {
  // write a small synthetic image set in IDX form, then drive the full
  // config -> load -> stream -> train -> emit path against it
  TempDir tmp;
  Rng rng = seeded_rng(1, "idx-e2e");
  const auto base = make_synthetic_image_base(420, 10, 28, rng);
  {
    std::ofstream img(tmp.path / "train-images-idx3-ubyte", std::ios::binary);
    std::ofstream lab(tmp.path / "train-labels-idx1-ubyte", std::ios::binary);
    const auto be32 = [](std::ofstream& f, std::uint32_t v) {
      const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
      f.write(reinterpret_cast<const char*>(b), 4);
    };
    be32(img, 0x803);
    be32(img, 420);
    be32(img, 28);
    be32(img, 28);
    be32(lab, 0x801);
    be32(lab, 420);
    for (const Example& e : base) {
      for (double v : e.x) img.put(static_cast<char>(std::lround(v * 255.0)));
      lab.put(static_cast<char>(e.y));
    }
  }
  ::setenv("LAMAML_DATA_DIR", tmp.path.c_str(), 1);
  const ExperimentConfig cfg = parse_config_json(R"({
    "benchmark": "rotations", "tasks": 3, "n_per_task": 60, "test_frac": 0.5,
    "glances": 2, "hidden": [32],
    "trainer": {"algorithm": "la_maml", "k": 5, "alpha0": 0.15, "eta": 0.1,
                "replay_capacity": 60},
    "seeds": [0]
  })");
  const ExperimentResult r = run_experiment(cfg);
  ::unsetenv("LAMAML_DATA_DIR");
  REQUIRE(r.rows.size() == 2);
  REQUIRE(r.rows[0].error.empty());
  CHECK(r.records[0].completed);
  CHECK(r.records[0].rows.size() == 3);
  CHECK(*r.rows[0].ra > 10.0);  // learnt something beyond chance
}

TEST_CASE("low-data benchmark sizing: 20 tasks of 200 samples with 500-example test sets") {
  StreamSpec spec;
  spec.benchmark = "synth_permutations";
  spec.tasks = 20;
  spec.n_per_task = 200;
  spec.test_frac = 0.714286;
  const TaskStream ts = build_stream(spec, 0);
  REQUIRE(ts.tasks.size() == 20);
  for (const Task& t : ts.tasks) {
    CHECK(t.train.size() == 200);
    CHECK(t.test.size() == 500);
  }
  CHECK(ts.input_dim == 784);
  CHECK(ts.num_classes == 10);
}

TEST_CASE("timing column is zeroed unless requested") {
  ExperimentConfig cfg = parse_config_json(kSyntheticConfig);
  const ExperimentResult untimed = run_experiment(cfg);
  for (const auto& row : untimed.rows) CHECK(row.wall_time_s == 0.0);
  cfg.timing = true;
  const ExperimentResult timed = run_experiment(cfg);
  double total = 0.0;
  for (const auto& row : timed.rows) total += row.wall_time_s;
  CHECK(total > 0.0);
}

TEST_SUITE_END();
