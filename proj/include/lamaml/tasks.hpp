#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lamaml/example.hpp"
#include "lamaml/rng.hpp"

namespace lamaml {

enum class Protocol { single_pass, multi_pass };

struct TransformDesc {
  enum class Kind { none, rotation, permutation, blobs } kind = Kind::none;
  double angle_deg = 0.0;           // rotation
  std::vector<std::int32_t> perm;   // permutation (empty = identity)
};

struct Task {
  std::int32_t id = 0;
  std::vector<Example> train;
  std::vector<Example> test;
  TransformDesc transform;
};

// Ordered sequence of tasks plus the streaming protocol. Immutable after
// construction; batches are derived deterministically from shuffle_seed.
struct TaskStream {
  std::vector<Task> tasks;
  Protocol protocol = Protocol::single_pass;
  std::size_t batch_size = 10;
  std::size_t glances = 1;     // single-pass: consecutive updates per batch
  std::size_t epochs = 1;      // multi-pass only
  std::size_t num_classes = 0;
  std::size_t input_dim = 0;
  std::uint64_t shuffle_seed = 0;
};

struct Batch {
  std::vector<Example> items;
  // True the first time this data is presented; the harness pushes items
  // into the replay buffer only then (glance repeats reuse the same data).
  bool first_presentation = true;
};

// --- IDX ingestion -------------------------------------------------------

// Loads an IDX image/label pair (big-endian magics 0x00000803 / 0x00000801).
// Pixels are scaled to [0,1] by /255. Distinct errors for bad magic,
// truncation and image/label count mismatch.
std::vector<Example> load_idx(const std::string& images_path, const std::string& labels_path);

// --- Benchmark construction ----------------------------------------------

// Per-task test-set size: min(500, n_per_task * test_frac / (1 - test_frac)).
std::size_t split_test_count(std::size_t n_per_task, double test_frac);

// Task 1 keeps pixel order; tasks 2..T shuffle pixels by an independent
// uniform random permutation. Each task subsamples `base` without
// replacement; per-task test size is min(500, n_per_task*test_frac/(1-test_frac)).
TaskStream make_permutation_tasks(const std::vector<Example>& base, std::size_t T,
                                  std::size_t n_per_task, double test_frac, Rng& rng);

// Task t is rotated by (t-1)*180/(T-1) degrees (T>=2; task 1 unrotated),
// bilinear interpolation, zero fill. Images must be square.
TaskStream make_rotation_tasks(const std::vector<Example>& base, std::size_t T,
                               std::size_t n_per_task, double test_frac, Rng& rng);

// Gaussian blobs with unit covariance, class means separated by
// `separation`, under a per-task random rotation of the input space.
TaskStream make_synthetic_tasks(std::size_t T, std::size_t classes_per_task, std::size_t dim,
                                std::size_t n_per_task, double separation, Rng& rng);

// Procedurally generated image dataset: `classes` low-frequency random
// prototypes rendered at side x side with per-example shift and noise.
// Stands in for digit data wherever a rotation/permutation stream is
// needed without any files on disk.
std::vector<Example> make_synthetic_image_base(std::size_t n, std::size_t classes,
                                               std::size_t side, Rng& rng);

// Rotate a square image (row-major, side*side) about its center by
// `angle_deg`, bilinear interpolation, out-of-bounds filled with 0.
std::vector<double> rotate_image(const std::vector<double>& img, std::size_t side,
                                 double angle_deg);

// --- Streaming -----------------------------------------------------------

// single-pass: one pass in stream order, each batch yielded `glances`
// consecutive times; multi-pass: `epochs` shuffled passes, glances = 1.
std::vector<Batch> stream_batches(const TaskStream& ts, std::size_t task_index);

}  // namespace lamaml
