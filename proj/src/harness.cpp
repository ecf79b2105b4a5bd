#include "lamaml/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lamaml/errors.hpp"
#include "lamaml/metrics.hpp"

namespace lamaml {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& path) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config key: " + path + key);
    }
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for config key: ") + key);
  }
}

std::string format_double(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt_cell(const std::optional<double>& v, int digits,
                     const std::optional<double>& std_dev = std::nullopt) {
  if (!v) return "";
  std::string s = format_double(*v, digits);
  if (std_dev) s += "±" + format_double(*std_dev, digits);
  return s;
}

struct Stats {
  double mean = 0.0, std_dev = 0.0;
  std::size_t n = 0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  s.n = xs.size();
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double acc = 0.0;
    for (double x : xs) acc += (x - s.mean) * (x - s.mean);
    s.std_dev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

std::string resolve_data_dir(const StreamSpec& spec) {
  if (const char* env = std::getenv("LAMAML_DATA_DIR"); env && *env) return env;
  if (!spec.data_dir.empty()) return spec.data_dir;
  return "data";
}

ExperimentConfig parse_config_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  reject_unknown_keys(j, {"benchmark", "tasks", "n_per_task", "test_frac", "data_dir", "protocol",
                          "epochs", "batch_size", "glances", "hidden", "synthetic", "trainer",
                          "seeds", "out", "eval_every", "timing"},
                      "");

  ExperimentConfig cfg;
  auto& s = cfg.stream;
  s.benchmark = get_or<std::string>(j, "benchmark", s.benchmark);
  const std::set<std::string> benchmarks = {"rotations", "permutations", "synth_rotations",
                                            "synth_permutations", "synthetic"};
  if (!benchmarks.count(s.benchmark)) throw ConfigError("unknown benchmark: " + s.benchmark);

  s.tasks = get_or<std::size_t>(j, "tasks", s.tasks);
  s.n_per_task = get_or<std::size_t>(j, "n_per_task", s.n_per_task);
  s.test_frac = get_or<double>(j, "test_frac", s.test_frac);
  s.data_dir = get_or<std::string>(j, "data_dir", s.data_dir);
  const std::string protocol = get_or<std::string>(j, "protocol", "single_pass");
  if (protocol == "single_pass") {
    s.protocol = Protocol::single_pass;
  } else if (protocol == "multi_pass") {
    s.protocol = Protocol::multi_pass;
  } else {
    throw ConfigError("protocol must be single_pass or multi_pass, got: " + protocol);
  }
  s.epochs = get_or<std::size_t>(j, "epochs", 1);
  if (s.protocol == Protocol::single_pass && s.epochs != 1) {
    throw ConfigError("single_pass implies epochs == 1");
  }
  s.batch_size = get_or<std::size_t>(j, "batch_size", 10);
  s.glances = get_or<std::size_t>(j, "glances", 1);
  if (s.tasks == 0 || s.n_per_task == 0 || s.batch_size == 0 || s.glances == 0 || s.epochs == 0) {
    throw ConfigError("tasks, n_per_task, batch_size, glances and epochs must be >= 1");
  }

  if (j.contains("synthetic")) {
    const json& sy = j.at("synthetic");
    reject_unknown_keys(sy, {"dim", "classes", "separation", "image_side", "image_classes"},
                        "synthetic.");
    s.dim = get_or<std::size_t>(sy, "dim", s.dim);
    s.classes = get_or<std::size_t>(sy, "classes", s.classes);
    s.separation = get_or<double>(sy, "separation", s.separation);
    s.image_side = get_or<std::size_t>(sy, "image_side", s.image_side);
    s.image_classes = get_or<std::size_t>(sy, "image_classes", s.image_classes);
  }

  if (!j.contains("trainer") || !j.at("trainer").is_object()) {
    throw ConfigError("config needs a trainer object");
  }
  const json& tj = j.at("trainer");
  reject_unknown_keys(tj, {"algorithm", "k", "lr", "alpha", "beta", "alpha0", "eta",
                           "replay_capacity", "replay_draw", "clip", "meta_loss",
                           "clip_alpha_inner"},
                      "trainer.");
  auto& t = cfg.trainer;
  t.algorithm = algorithm_from_string(get_or<std::string>(tj, "algorithm", "online"));
  t.k = get_or<std::size_t>(tj, "k", 1);
  t.lr = get_or<double>(tj, "lr", t.lr);
  t.alpha = get_or<double>(tj, "alpha", t.alpha);
  t.beta = get_or<double>(tj, "beta", t.beta);
  t.alpha0 = get_or<double>(tj, "alpha0", t.alpha0);
  t.eta = get_or<double>(tj, "eta", t.eta);
  t.replay_capacity = get_or<std::size_t>(tj, "replay_capacity", t.replay_capacity);
  t.replay_draw = get_or<std::size_t>(tj, "replay_draw", t.replay_draw);
  t.clip = get_or<double>(tj, "clip", 2.0);
  const std::string mode = get_or<std::string>(tj, "meta_loss", "all_steps");
  if (mode == "all_steps") {
    t.meta_mode = MetaLossMode::all_steps;
  } else if (mode == "last_step") {
    t.meta_mode = MetaLossMode::last_step;
  } else {
    throw ConfigError("meta_loss must be all_steps or last_step, got: " + mode);
  }
  t.clip_alpha_in_inner = get_or<bool>(tj, "clip_alpha_inner", false);
  if (t.k == 0) throw ConfigError("trainer.k must be >= 1");
  if (t.is_meta() && s.batch_size % t.k != 0) {
    throw ConfigError("k=" + std::to_string(t.k) + " does not divide batch_size=" +
                      std::to_string(s.batch_size));
  }
  if (!(t.clip > 0.0)) throw ConfigError("trainer.clip must be positive");
  if (t.alpha0 <= 0.0 || t.eta < 0.0) {
    throw ConfigError("trainer.alpha0 must be positive and trainer.eta nonnegative");
  }

  cfg.hidden = get_or<std::vector<std::size_t>>(j, "hidden", cfg.hidden);
  if (cfg.hidden.empty()) throw ConfigError("hidden must name at least one hidden layer");
  cfg.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", cfg.seeds);
  if (cfg.seeds.empty()) throw ConfigError("seeds must be nonempty");
  cfg.out = get_or<std::string>(j, "out", cfg.out);
  cfg.eval_every = get_or<std::size_t>(j, "eval_every", 0);
  cfg.timing = get_or<bool>(j, "timing", false);

  if (s.benchmark == "rotations" || s.benchmark == "permutations") {
    const std::string dir = resolve_data_dir(s);
    for (const char* name : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte"}) {
      const auto p = std::filesystem::path(dir) / name;
      if (!std::filesystem::exists(p)) {
        throw ConfigError("missing data file: " + p.string() +
                          " (set LAMAML_DATA_DIR or data_dir)");
      }
    }
  }

  cfg.snapshot = j.dump();
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_json(ss.str());
}

std::vector<Example> load_benchmark_base(const StreamSpec& spec) {
  if (spec.benchmark == "rotations" || spec.benchmark == "permutations") {
    const std::filesystem::path dir = resolve_data_dir(spec);
    return load_idx((dir / "train-images-idx3-ubyte").string(),
                    (dir / "train-labels-idx1-ubyte").string());
  }
  return {};
}

TaskStream build_stream(const StreamSpec& spec, std::uint64_t seed,
                        const std::vector<Example>& base) {
  Rng rng = seeded_rng(seed, "tasks");
  TaskStream ts;
  if (spec.benchmark == "synthetic") {
    ts = make_synthetic_tasks(spec.tasks, spec.classes, spec.dim, spec.n_per_task,
                              spec.separation, rng);
  } else {
    const std::vector<Example>* use = &base;
    std::vector<Example> synth;
    if (spec.benchmark == "synth_rotations" || spec.benchmark == "synth_permutations") {
      const std::size_t need =
          spec.tasks * (spec.n_per_task + split_test_count(spec.n_per_task, spec.test_frac));
      synth = make_synthetic_image_base(need, spec.image_classes, spec.image_side, rng);
      use = &synth;
    }
    if (spec.benchmark == "rotations" || spec.benchmark == "synth_rotations") {
      ts = make_rotation_tasks(*use, spec.tasks, spec.n_per_task, spec.test_frac, rng);
    } else {
      ts = make_permutation_tasks(*use, spec.tasks, spec.n_per_task, spec.test_frac, rng);
    }
  }
  ts.protocol = spec.protocol;
  ts.epochs = spec.epochs;
  ts.batch_size = spec.batch_size;
  ts.glances = spec.protocol == Protocol::single_pass ? spec.glances : 1;
  return ts;
}

TaskStream build_stream(const StreamSpec& spec, std::uint64_t seed) {
  return build_stream(spec, seed, load_benchmark_base(spec));
}

Network build_network(const ExperimentConfig& cfg, const TaskStream& stream) {
  std::vector<std::size_t> sizes;
  sizes.push_back(stream.input_dim);
  for (std::size_t h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(stream.num_classes);
  return Network(sizes);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const std::vector<Example> base = load_benchmark_base(cfg.stream);

  ExperimentResult result;
  result.rows.resize(cfg.seeds.size());
  result.records.resize(cfg.seeds.size());

  const auto run_seed = [&](std::size_t i) {
    ResultRow row;
    row.algorithm = to_string(cfg.trainer.algorithm);
    row.benchmark = cfg.stream.benchmark;
    row.seed = std::to_string(cfg.seeds[i]);
    try {
      const TaskStream stream = build_stream(cfg.stream, cfg.seeds[i], base);
      const Network net = build_network(cfg, stream);
      RunOptions opts;
      opts.eval_every = cfg.eval_every;
      RunRecord rec = run_training(net, stream, cfg.trainer, cfg.seeds[i], opts);
      if (rec.completed) {
        row.ra = retained_accuracy(rec);
        row.bti = rec.num_tasks >= 2 ? std::optional<double>(bti(rec)) : std::nullopt;
        row.alignment = mean_alignment(rec);
      } else {
        row.error = rec.error.empty() ? "aborted" : rec.error;
      }
      row.wall_time_s = rec.wall_time_s;
      result.records[i] = std::move(rec);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    result.rows[i] = std::move(row);
  };

  const std::size_t workers =
      std::max<std::size_t>(1, std::min({cfg.seeds.size(),
                                         static_cast<std::size_t>(
                                             std::thread::hardware_concurrency())}));
  if (workers <= 1 || cfg.seeds.size() == 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) run_seed(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < cfg.seeds.size(); i += workers) run_seed(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  // mean±std summary over the seeds that finished
  std::vector<double> ras, btis, aligns, walls;
  for (const ResultRow& row : result.rows) {
    if (row.ra) ras.push_back(*row.ra);
    if (row.bti) btis.push_back(*row.bti);
    if (row.alignment) aligns.push_back(*row.alignment);
    walls.push_back(row.wall_time_s);
  }
  ResultRow summary;
  summary.algorithm = to_string(cfg.trainer.algorithm);
  summary.benchmark = cfg.stream.benchmark;
  summary.seed = "mean±std";
  if (!ras.empty()) {
    const Stats s = stats_of(ras);
    summary.ra = s.mean;
    summary.ra_std = s.std_dev;
  }
  if (!btis.empty()) {
    const Stats s = stats_of(btis);
    summary.bti = s.mean;
    summary.bti_std = s.std_dev;
  }
  if (!aligns.empty()) {
    const Stats s = stats_of(aligns);
    summary.alignment = s.mean;
    summary.alignment_std = s.std_dev;
  }
  summary.wall_time_s = stats_of(walls).mean;
  if (!cfg.timing) {
    summary.wall_time_s = 0.0;
    for (ResultRow& row : result.rows) row.wall_time_s = 0.0;
  }
  result.rows.push_back(std::move(summary));
  return result;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string out = "algorithm,benchmark,seed,ra,bti,alignment,wall_time_s\n";
  for (const ResultRow& row : rows) {
    out += row.algorithm + "," + row.benchmark + "," + row.seed + ",";
    out += opt_cell(row.ra, 4, row.ra_std) + ",";
    out += opt_cell(row.bti, 4, row.bti_std) + ",";
    out += opt_cell(row.alignment, 6, row.alignment_std) + ",";
    out += format_double(row.wall_time_s, 3) + "\n";
  }
  return out;
}

void emit_results(const std::vector<ResultRow>& rows, const std::vector<RunRecord>& records,
                  const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);

  const auto csv_path = std::filesystem::path(out_dir) / "results.csv";
  {
    std::ofstream f(csv_path, std::ios::binary);
    if (!f) throw DataError("cannot write " + csv_path.string());
    f << results_csv(rows);
  }

  const auto jsonl_path = std::filesystem::path(out_dir) / "records.jsonl";
  std::ofstream f(jsonl_path, std::ios::binary);
  if (!f) throw DataError("cannot write " + jsonl_path.string());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RunRecord& rec = records[i];
    nlohmann::ordered_json j;
    if (i < rows.size()) {
      j["algorithm"] = rows[i].algorithm;
      j["benchmark"] = rows[i].benchmark;
      if (rows[i].ra) j["ra"] = *rows[i].ra;
      if (rows[i].bti) j["bti"] = *rows[i].bti;
      if (rows[i].alignment) j["alignment"] = *rows[i].alignment;
    }
    j["seed"] = rec.seed;
    j["completed"] = rec.completed;
    if (!rec.error.empty()) j["error"] = rec.error;
    j["wall_time_s"] = rec.wall_time_s;
    nlohmann::ordered_json acc = nlohmann::ordered_json::array();
    for (const EvalRow& row : rec.rows) {
      acc.push_back({{"after_task", row.after_task}, {"acc", row.acc}});
    }
    j["acc"] = std::move(acc);
    if (!rec.curve.empty()) {
      nlohmann::ordered_json curve = nlohmann::ordered_json::array();
      for (const EvalRow& row : rec.curve) {
        curve.push_back({{"after_task", row.after_task}, {"acc", row.acc}});
      }
      j["curve"] = std::move(curve);
    }
    if (!rec.old_task_alignment.empty()) {
      nlohmann::ordered_json ota = nlohmann::ordered_json::array();
      for (const auto& [t, v] : rec.old_task_alignment) ota.push_back({t, v});
      j["old_task_alignment"] = std::move(ota);
    }
    f << j.dump() << "\n";
  }
}

}  // namespace lamaml
