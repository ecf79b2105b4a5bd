#include "lamaml/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "lamaml/errors.hpp"

namespace lamaml {

namespace {

std::uint32_t read_u32_be(std::ifstream& f, const std::string& path) {
  unsigned char b[4];
  if (!f.read(reinterpret_cast<char*>(b), 4)) {
    throw DataError("truncated file: " + path);
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
         std::uint32_t(b[3]);
}

// Draw `count` indices from the back of `pool` -- pool is pre-shuffled so
// this is a uniform subsample without replacement.
std::vector<std::size_t> take_indices(std::vector<std::size_t>& pool, std::size_t count,
                                      const char* what) {
  if (pool.size() < count) {
    throw DataError(std::string("insufficient base data for ") + what);
  }
  std::vector<std::size_t> out(pool.end() - static_cast<std::ptrdiff_t>(count), pool.end());
  pool.resize(pool.size() - count);
  return out;
}

std::size_t class_count(const std::vector<Example>& base) {
  std::int32_t m = -1;
  for (const auto& e : base) m = std::max(m, e.y);
  return static_cast<std::size_t>(m + 1);
}

// Shared skeleton of the permutation/rotation builders: disjoint per-task
// subsample of base, transform applied to every drawn example.
template <typename MakeTransform, typename Apply>
TaskStream build_image_stream(const std::vector<Example>& base, std::size_t T,
                              std::size_t n_per_task, double test_frac, Rng& rng,
                              MakeTransform make_transform, Apply apply) {
  const std::size_t n_test = split_test_count(n_per_task, test_frac);
  if (base.size() < T * (n_per_task + n_test)) {
    throw DataError("insufficient base data: need " + std::to_string(T * (n_per_task + n_test)) +
                    " examples, have " + std::to_string(base.size()));
  }
  std::vector<std::size_t> pool(base.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  rng.shuffle(pool);

  TaskStream ts;
  ts.num_classes = class_count(base);
  ts.input_dim = base.empty() ? 0 : base.front().x.size();
  ts.shuffle_seed = rng.next();

  for (std::size_t t = 0; t < T; ++t) {
    Task task;
    task.id = static_cast<std::int32_t>(t);
    task.transform = make_transform(t);
    for (std::size_t i : take_indices(pool, n_per_task, "train split")) {
      Example e = base[i];
      e.task_id = task.id;
      e.x = apply(task.transform, e.x);
      task.train.push_back(std::move(e));
    }
    for (std::size_t i : take_indices(pool, n_test, "test split")) {
      Example e = base[i];
      e.task_id = task.id;
      e.x = apply(task.transform, e.x);
      task.test.push_back(std::move(e));
    }
    ts.tasks.push_back(std::move(task));
  }
  return ts;
}

}  // namespace

std::size_t split_test_count(std::size_t n_per_task, double test_frac) {
  if (!(test_frac >= 0.0) || test_frac >= 1.0) {
    throw ConfigError("test_frac must be in [0, 1)");
  }
  const double raw = static_cast<double>(n_per_task) * test_frac / (1.0 - test_frac);
  return std::min<std::size_t>(500, static_cast<std::size_t>(std::llround(raw)));
}

std::vector<Example> load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imgf(images_path, std::ios::binary);
  if (!imgf) throw DataError("cannot open " + images_path);
  std::ifstream labf(labels_path, std::ios::binary);
  if (!labf) throw DataError("cannot open " + labels_path);

  const std::uint32_t img_magic = read_u32_be(imgf, images_path);
  if (img_magic != 0x00000803u) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad magic 0x%08x in images file", img_magic);
    throw DataError(std::string(buf) + " " + images_path);
  }
  const std::uint32_t n_images = read_u32_be(imgf, images_path);
  const std::uint32_t rows = read_u32_be(imgf, images_path);
  const std::uint32_t cols = read_u32_be(imgf, images_path);

  const std::uint32_t lab_magic = read_u32_be(labf, labels_path);
  if (lab_magic != 0x00000801u) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad magic 0x%08x in labels file", lab_magic);
    throw DataError(std::string(buf) + " " + labels_path);
  }
  const std::uint32_t n_labels = read_u32_be(labf, labels_path);
  if (n_images != n_labels) {
    throw DataError("count mismatch: " + std::to_string(n_images) + " images vs " +
                    std::to_string(n_labels) + " labels");
  }

  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<Example> out(n_images);
  std::vector<unsigned char> row(pixels);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    if (!imgf.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(pixels))) {
      throw DataError("truncated file: " + images_path);
    }
    out[i].x.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) out[i].x[p] = row[p] / 255.0;
    unsigned char y;
    if (!labf.read(reinterpret_cast<char*>(&y), 1)) {
      throw DataError("truncated file: " + labels_path);
    }
    out[i].y = y;
  }
  return out;
}

TaskStream make_permutation_tasks(const std::vector<Example>& base, std::size_t T,
                                  std::size_t n_per_task, double test_frac, Rng& rng) {
  const std::size_t dim = base.empty() ? 0 : base.front().x.size();
  auto make_transform = [&](std::size_t t) {
    TransformDesc d;
    d.kind = TransformDesc::Kind::permutation;
    if (t > 0) {
      d.perm.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) d.perm[i] = static_cast<std::int32_t>(i);
      rng.shuffle(d.perm);
    }
    return d;
  };
  auto apply = [](const TransformDesc& d, const std::vector<double>& x) {
    if (d.perm.empty()) return x;  // identity for task 1
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[static_cast<std::size_t>(d.perm[i])];
    return out;
  };
  return build_image_stream(base, T, n_per_task, test_frac, rng, make_transform, apply);
}

std::vector<double> rotate_image(const std::vector<double>& img, std::size_t side,
                                 double angle_deg) {
  if (img.size() != side * side) throw ShapeError("rotate_image: image is not side*side");
  const double rad = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double ctr = (static_cast<double>(side) - 1.0) / 2.0;
  std::vector<double> out(img.size(), 0.0);
  // Inverse mapping: each output pixel samples the input at the position
  // obtained by rotating back around the center.
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t col = 0; col < side; ++col) {
      const double yr = static_cast<double>(r) - ctr;
      const double xr = static_cast<double>(col) - ctr;
      const double sy = c * yr + s * xr + ctr;
      const double sx = -s * yr + c * xr + ctr;
      const double fy = std::floor(sy), fx = std::floor(sx);
      const double wy = sy - fy, wx = sx - fx;
      const auto at = [&](double yy, double xx) -> double {
        if (yy < 0 || xx < 0 || yy >= static_cast<double>(side) || xx >= static_cast<double>(side))
          return 0.0;
        return img[static_cast<std::size_t>(yy) * side + static_cast<std::size_t>(xx)];
      };
      out[r * side + col] = (1 - wy) * (1 - wx) * at(fy, fx) + (1 - wy) * wx * at(fy, fx + 1) +
                            wy * (1 - wx) * at(fy + 1, fx) + wy * wx * at(fy + 1, fx + 1);
    }
  }
  return out;
}

TaskStream make_rotation_tasks(const std::vector<Example>& base, std::size_t T,
                               std::size_t n_per_task, double test_frac, Rng& rng) {
  const std::size_t dim = base.empty() ? 0 : base.front().x.size();
  const std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(double(dim))));
  if (side * side != dim) throw ShapeError("make_rotation_tasks: images must be square");
  auto make_transform = [&](std::size_t t) {
    TransformDesc d;
    d.kind = TransformDesc::Kind::rotation;
    d.angle_deg = T >= 2 ? static_cast<double>(t) * 180.0 / static_cast<double>(T - 1) : 0.0;
    return d;
  };
  auto apply = [&](const TransformDesc& d, const std::vector<double>& x) {
    return d.angle_deg == 0.0 ? x : rotate_image(x, side, d.angle_deg);
  };
  return build_image_stream(base, T, n_per_task, test_frac, rng, make_transform, apply);
}

namespace {

// Orthonormal basis from a Gaussian matrix (Gram-Schmidt); uniform enough
// for scrambling blob means across tasks.
std::vector<std::vector<double>> random_rotation(std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> q(dim, std::vector<double>(dim));
  for (auto& row : q)
    for (auto& v : row) v = rng.normal();
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double d = 0;
      for (std::size_t k = 0; k < dim; ++k) d += q[i][k] * q[j][k];
      for (std::size_t k = 0; k < dim; ++k) q[i][k] -= d * q[j][k];
    }
    double n = 0;
    for (double v : q[i]) n += v * v;
    n = std::sqrt(n);
    for (double& v : q[i]) v /= n;
  }
  return q;
}

}  // namespace

TaskStream make_synthetic_tasks(std::size_t T, std::size_t classes_per_task, std::size_t dim,
                                std::size_t n_per_task, double separation, Rng& rng) {
  if (!(separation >= 0.0)) throw ConfigError("separation must be nonnegative");
  if (classes_per_task > dim) throw ConfigError("synthetic tasks need dim >= classes");

  TaskStream ts;
  ts.num_classes = classes_per_task;
  ts.input_dim = dim;
  ts.shuffle_seed = rng.next();
  const std::size_t n_test = std::min<std::size_t>(500, std::max<std::size_t>(100, n_per_task));

  for (std::size_t t = 0; t < T; ++t) {
    const auto rot = random_rotation(dim, rng);
    // Class c mean: separation/sqrt(2) * e_c, so pairwise distances equal
    // `separation`; then rotate the whole space.
    auto sample_example = [&](std::int32_t cls) {
      std::vector<double> z(dim);
      for (std::size_t i = 0; i < dim; ++i) z[i] = rng.normal();
      z[static_cast<std::size_t>(cls)] += separation / std::numbers::sqrt2;
      std::vector<double> x(dim, 0.0);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t k = 0; k < dim; ++k) x[i] += rot[i][k] * z[k];
      return x;
    };
    Task task;
    task.id = static_cast<std::int32_t>(t);
    task.transform.kind = TransformDesc::Kind::blobs;
    for (std::size_t n = 0; n < n_per_task; ++n) {
      const auto cls = static_cast<std::int32_t>(n % classes_per_task);
      task.train.push_back({sample_example(cls), cls, task.id});
    }
    rng.shuffle(task.train);
    for (std::size_t n = 0; n < n_test; ++n) {
      const auto cls = static_cast<std::int32_t>(n % classes_per_task);
      task.test.push_back({sample_example(cls), cls, task.id});
    }
    ts.tasks.push_back(std::move(task));
  }
  return ts;
}

std::vector<Example> make_synthetic_image_base(std::size_t n, std::size_t classes,
                                               std::size_t side, Rng& rng) {
  // Class prototypes: low-frequency random fields, bilinearly upsampled
  // from a coarse grid, then thresholded into bright strokes on a dark
  // background so the pixel statistics resemble handwritten digits.
  const std::size_t coarse = 7;
  std::vector<std::vector<double>> protos(classes);
  for (auto& proto : protos) {
    std::vector<double> grid(coarse * coarse);
    for (double& g : grid) g = rng.next_double();
    proto.resize(side * side);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const double gy = static_cast<double>(r) / (side - 1) * (coarse - 1);
        const double gx = static_cast<double>(c) / (side - 1) * (coarse - 1);
        const std::size_t y0 = std::min<std::size_t>(coarse - 2, static_cast<std::size_t>(gy));
        const std::size_t x0 = std::min<std::size_t>(coarse - 2, static_cast<std::size_t>(gx));
        const double wy = gy - static_cast<double>(y0), wx = gx - static_cast<double>(x0);
        const double v = (1 - wy) * (1 - wx) * grid[y0 * coarse + x0] +
                         (1 - wy) * wx * grid[y0 * coarse + x0 + 1] +
                         wy * (1 - wx) * grid[(y0 + 1) * coarse + x0] +
                         wy * wx * grid[(y0 + 1) * coarse + x0 + 1];
        // keep the top ~30% of the field as strokes
        proto[r * side + c] = std::clamp((v - 0.7) / 0.3, 0.0, 1.0);
      }
    }
  }

  std::vector<Example> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cls = static_cast<std::int32_t>(i % classes);
    const auto& proto = protos[static_cast<std::size_t>(cls)];
    const int dy = static_cast<int>(rng.next_below(5)) - 2;
    const int dx = static_cast<int>(rng.next_below(5)) - 2;
    std::vector<double> img(side * side, 0.0);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const int sr = static_cast<int>(r) - dy, sc = static_cast<int>(c) - dx;
        double v = 0.0;
        if (sr >= 0 && sc >= 0 && sr < static_cast<int>(side) && sc < static_cast<int>(side)) {
          v = proto[static_cast<std::size_t>(sr) * side + static_cast<std::size_t>(sc)];
        }
        if (v > 0.0) v += 0.15 * (rng.next_double() - 0.5);  // stroke-intensity jitter
        img[r * side + c] = std::clamp(v, 0.0, 1.0);
      }
    }
    out[i] = {std::move(img), cls, -1};
  }
  rng.shuffle(out);
  return out;
}

std::vector<Batch> stream_batches(const TaskStream& ts, std::size_t task_index) {
  if (task_index >= ts.tasks.size()) throw ConfigError("stream_batches: bad task index");
  const auto& train = ts.tasks[task_index].train;
  std::vector<Batch> out;

  auto emit_pass = [&](const std::vector<std::size_t>& order, std::size_t repeats) {
    for (std::size_t start = 0; start < order.size(); start += ts.batch_size) {
      const std::size_t stop = std::min(order.size(), start + ts.batch_size);
      Batch b;
      for (std::size_t i = start; i < stop; ++i) b.items.push_back(train[order[i]]);
      for (std::size_t g = 0; g < repeats; ++g) {
        Batch copy = b;
        copy.first_presentation = (g == 0);
        out.push_back(std::move(copy));
      }
    }
  };

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  if (ts.protocol == Protocol::single_pass) {
    emit_pass(order, std::max<std::size_t>(1, ts.glances));
  } else {
    Rng rng = seeded_rng(ts.shuffle_seed, "epoch-shuffle/" + std::to_string(task_index));
    for (std::size_t ep = 0; ep < std::max<std::size_t>(1, ts.epochs); ++ep) {
      rng.shuffle(order);
      emit_pass(order, 1);
    }
  }
  return out;
}

}  // namespace lamaml
