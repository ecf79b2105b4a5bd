#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lamaml/tasks.hpp"
#include "lamaml/trainers.hpp"

namespace lamaml {

struct StreamSpec {
  std::string benchmark = "synthetic";  // rotations | permutations | synth_rotations |
                                        // synth_permutations | synthetic
  std::size_t tasks = 5;
  std::size_t n_per_task = 200;
  double test_frac = 0.5;
  std::string data_dir;  // IDX benchmarks; LAMAML_DATA_DIR overrides
  Protocol protocol = Protocol::single_pass;
  std::size_t epochs = 1;
  std::size_t batch_size = 10;
  std::size_t glances = 1;
  // synthetic blob streams
  std::size_t dim = 20;
  std::size_t classes = 5;
  double separation = 3.0;
  // synthetic image streams
  std::size_t image_side = 28;
  std::size_t image_classes = 10;
};

struct ExperimentConfig {
  StreamSpec stream;
  TrainerConfig trainer;
  std::vector<std::size_t> hidden = {100, 100};
  std::vector<std::uint64_t> seeds = {0};
  std::string out = "results";
  std::size_t eval_every = 0;
  bool timing = false;  // when false the CSV timing column is zeroed so
                        // identical runs produce byte-identical output
  std::string snapshot;  // the parsed JSON, re-serialized
};

struct ResultRow {
  std::string algorithm;
  std::string benchmark;
  std::string seed;  // seed number, or "mean±std" for the summary row
  std::optional<double> ra;
  std::optional<double> bti;
  std::optional<double> ra_std;   // summary row only
  std::optional<double> bti_std;  // summary row only
  std::optional<double> alignment;
  std::optional<double> alignment_std;
  double wall_time_s = 0.0;
  std::string error;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;     // one per seed, plus a mean±std summary
  std::vector<RunRecord> records;  // one per seed
};

// Parses and validates a JSON config; unknown keys are rejected with their
// path, defaults are filled, and referenced data files must exist.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& json_text);

// Resolved data directory: LAMAML_DATA_DIR env var, else the config value,
// else "./data".
std::string resolve_data_dir(const StreamSpec& spec);

// Deterministic stream construction for one seed.
TaskStream build_stream(const StreamSpec& spec, std::uint64_t seed);
TaskStream build_stream(const StreamSpec& spec, std::uint64_t seed,
                        const std::vector<Example>& base);

// For IDX benchmarks, loads the base dataset once (shared across seeds).
std::vector<Example> load_benchmark_base(const StreamSpec& spec);

Network build_network(const ExperimentConfig& cfg, const TaskStream& stream);

// Runs every seed (parallel workers, deterministic aggregation) and
// appends the mean±std summary row. A failing seed yields a row with an
// error note; other seeds are unaffected.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writes <out_dir>/results.csv (header: algorithm,benchmark,seed,ra,bti,
// alignment,wall_time_s) and <out_dir>/records.jsonl with the full
// per-checkpoint accuracy matrices.
void emit_results(const std::vector<ResultRow>& rows, const std::vector<RunRecord>& records,
                  const std::string& out_dir);

std::string results_csv(const std::vector<ResultRow>& rows);

}  // namespace lamaml
