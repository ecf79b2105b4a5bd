// Python bindings over the core operations: enough surface to build
// streams, train, score and verify from Python.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lamaml/harness.hpp"
#include "lamaml/metrics.hpp"
#include "lamaml/nn.hpp"
#include "lamaml/replay.hpp"
#include "lamaml/tasks.hpp"
#include "lamaml/trainers.hpp"
#include "lamaml/verify.hpp"

namespace py = pybind11;
using namespace lamaml;

namespace {

std::vector<double> params_to_vec(const ParamVector& p) { return p.v; }
ParamVector vec_to_params(std::vector<double> v) { return ParamVector(std::move(v)); }

}  // namespace

PYBIND11_MODULE(lamaml, m) {
  m.doc() = "online continual learning trainers (look-ahead meta-learning family)";

  py::register_exception<ShapeError>(m, "ShapeError");
  py::register_exception<NumericError>(m, "NumericError");
  py::register_exception<DataError>(m, "DataError");
  py::register_exception<ConfigError>(m, "ConfigError");

  py::class_<Example>(m, "Example")
      .def(py::init([](std::vector<double> x, std::int32_t y, std::int32_t task_id) {
             return Example{std::move(x), y, task_id};
           }),
           py::arg("x"), py::arg("y"), py::arg("task_id") = -1)
      .def_readwrite("x", &Example::x)
      .def_readwrite("y", &Example::y)
      .def_readwrite("task_id", &Example::task_id);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next", &Rng::next)
      .def("next_double", &Rng::next_double)
      .def("uniform", &Rng::uniform)
      .def("normal", &Rng::normal);
  m.def("seeded_rng", [](std::uint64_t seed, const std::string& label) {
    return seeded_rng(seed, label);
  });

  py::class_<Network>(m, "Network")
      .def(py::init<std::vector<std::size_t>>(), py::arg("layer_sizes"))
      .def_property_readonly("layer_sizes", &Network::layer_sizes)
      .def_property_readonly("param_count", &Network::param_count)
      .def("init_params",
           [](const Network& net, std::uint64_t seed) {
             Rng rng = seeded_rng(seed, "init");
             return params_to_vec(net.init_params(rng));
           },
           py::arg("seed"));

  m.def("forward",
        [](const Network& net, std::vector<double> params, std::vector<double> x) {
          const std::size_t n = x.size();
          auto [logits, cache] =
              forward(net, vec_to_params(std::move(params)), Tensor({n}, std::move(x)));
          return logits.data;
        },
        py::arg("net"), py::arg("params"), py::arg("x"));
  m.def("softmax", [](std::vector<double> logits) { return softmax(logits); });
  m.def("loss_xent", [](std::vector<double> logits, std::size_t label) {
    const std::size_t n = logits.size();
    return loss_xent(Tensor({n}, std::move(logits)), label);
  });
  m.def("batch_loss_grad",
        [](const Network& net, std::vector<double> params, const std::vector<Example>& batch) {
          auto [loss, grad] = batch_loss_grad(net, vec_to_params(std::move(params)), batch);
          return py::make_tuple(loss, params_to_vec(grad));
        });
  m.def("finite_diff_grad",
        [](const std::function<double(std::vector<double>)>& lossfn, std::vector<double> params,
           double eps) {
          const ParamVector grad =
              finite_diff_grad([&](const ParamVector& p) { return lossfn(p.v); },
                               vec_to_params(std::move(params)), eps);
          return params_to_vec(grad);
        },
        py::arg("lossfn"), py::arg("params"), py::arg("eps") = 1e-5);
  m.def("accuracy",
        [](const Network& net, std::vector<double> params, const std::vector<Example>& examples) {
          return accuracy(net, vec_to_params(std::move(params)), examples);
        });
  m.def("clip_grad_norm", [](std::vector<double> grad, double max_norm) {
    return params_to_vec(clip_grad_norm(vec_to_params(std::move(grad)), max_norm));
  });
  m.def("sgd_step", [](std::vector<double> params, std::vector<double> grad, double lr) {
    return params_to_vec(
        sgd_step(vec_to_params(std::move(params)), vec_to_params(std::move(grad)), lr));
  });

  py::class_<ReplayBuffer>(m, "ReplayBuffer")
      .def(py::init<std::size_t>(), py::arg("capacity"))
      .def_property_readonly("capacity", &ReplayBuffer::capacity)
      .def_property_readonly("seen_count", &ReplayBuffer::seen_count)
      .def("__len__", &ReplayBuffer::size)
      .def("slots", &ReplayBuffer::slots)
      .def("reservoir_push", &ReplayBuffer::reservoir_push, py::arg("item"), py::arg("rng"))
      .def("sample", &ReplayBuffer::sample, py::arg("n"), py::arg("rng"));

  py::enum_<Protocol>(m, "Protocol")
      .value("single_pass", Protocol::single_pass)
      .value("multi_pass", Protocol::multi_pass);

  py::class_<Task>(m, "Task")
      .def_readonly("id", &Task::id)
      .def_readonly("train", &Task::train)
      .def_readonly("test", &Task::test);

  py::class_<TaskStream>(m, "TaskStream")
      .def_readonly("tasks", &TaskStream::tasks)
      .def_readwrite("batch_size", &TaskStream::batch_size)
      .def_readwrite("glances", &TaskStream::glances)
      .def_readwrite("epochs", &TaskStream::epochs)
      .def_readonly("num_classes", &TaskStream::num_classes)
      .def_readonly("input_dim", &TaskStream::input_dim);

  m.def("load_idx", &load_idx, py::arg("images_path"), py::arg("labels_path"));
  m.def("make_synthetic_tasks",
        [](std::size_t T, std::size_t classes, std::size_t dim, std::size_t n_per_task,
           double separation, std::uint64_t seed) {
          Rng rng = seeded_rng(seed, "tasks");
          return make_synthetic_tasks(T, classes, dim, n_per_task, separation, rng);
        },
        py::arg("tasks"), py::arg("classes"), py::arg("dim"), py::arg("n_per_task"),
        py::arg("separation"), py::arg("seed"));
  m.def("make_rotation_tasks",
        [](const std::vector<Example>& base, std::size_t T, std::size_t n, double test_frac,
           std::uint64_t seed) {
          Rng rng = seeded_rng(seed, "tasks");
          return make_rotation_tasks(base, T, n, test_frac, rng);
        });
  m.def("make_permutation_tasks",
        [](const std::vector<Example>& base, std::size_t T, std::size_t n, double test_frac,
           std::uint64_t seed) {
          Rng rng = seeded_rng(seed, "tasks");
          return make_permutation_tasks(base, T, n, test_frac, rng);
        });
  m.def("make_synthetic_image_base",
        [](std::size_t n, std::size_t classes, std::size_t side, std::uint64_t seed) {
          Rng rng = seeded_rng(seed, "image-base");
          return make_synthetic_image_base(n, classes, side, rng);
        },
        py::arg("n"), py::arg("classes") = 10, py::arg("side") = 28, py::arg("seed") = 0);
  m.def("rotate_image", &rotate_image);

  py::enum_<Algorithm>(m, "Algorithm")
      .value("online", Algorithm::online)
      .value("er", Algorithm::er)
      .value("agem", Algorithm::agem)
      .value("c_maml", Algorithm::c_maml)
      .value("sync", Algorithm::sync)
      .value("la_er", Algorithm::la_er)
      .value("la_maml", Algorithm::la_maml);

  py::enum_<MetaLossMode>(m, "MetaLossMode")
      .value("all_steps", MetaLossMode::all_steps)
      .value("last_step", MetaLossMode::last_step);

  py::class_<TrainerConfig>(m, "TrainerConfig")
      .def(py::init<>())
      .def_readwrite("algorithm", &TrainerConfig::algorithm)
      .def_readwrite("k", &TrainerConfig::k)
      .def_readwrite("lr", &TrainerConfig::lr)
      .def_readwrite("alpha", &TrainerConfig::alpha)
      .def_readwrite("beta", &TrainerConfig::beta)
      .def_readwrite("alpha0", &TrainerConfig::alpha0)
      .def_readwrite("eta", &TrainerConfig::eta)
      .def_readwrite("replay_capacity", &TrainerConfig::replay_capacity)
      .def_readwrite("replay_draw", &TrainerConfig::replay_draw)
      .def_readwrite("clip", &TrainerConfig::clip)
      .def_readwrite("meta_mode", &TrainerConfig::meta_mode);

  py::class_<EvalRow>(m, "EvalRow")
      .def_readonly("after_task", &EvalRow::after_task)
      .def_readonly("acc", &EvalRow::acc);

  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("rows", &RunRecord::rows)
      .def_readonly("alignments", &RunRecord::alignments)
      .def_readonly("old_task_alignment", &RunRecord::old_task_alignment)
      .def_readonly("num_tasks", &RunRecord::num_tasks)
      .def_readonly("seed", &RunRecord::seed)
      .def_readonly("completed", &RunRecord::completed)
      .def_readonly("error", &RunRecord::error)
      .def_readonly("wall_time_s", &RunRecord::wall_time_s);

  m.def("run_training",
        [](const Network& net, const TaskStream& stream, const TrainerConfig& cfg,
           std::uint64_t seed) { return run_training(net, stream, cfg, seed); },
        py::arg("net"), py::arg("stream"), py::arg("cfg"), py::arg("seed"));

  m.def("retained_accuracy", &retained_accuracy);
  m.def("bti", &bti);
  m.def("grad_alignment",
        [](const Network& net, std::vector<double> params, const std::vector<Example>& replay,
           const std::vector<Example>& incoming) -> py::object {
          const auto a = grad_alignment(net, vec_to_params(std::move(params)), replay, incoming);
          if (!a) return py::none();
          return py::float_(*a);
        });

  m.def("check_hypergradient",
        [](std::size_t k, std::uint64_t seed) {
          const auto c = check_hypergradient(k, seed);
          return py::dict(py::arg("k") = c.k, py::arg("max_rel_err") = c.max_rel_err,
                          py::arg("pass") = c.pass);
        },
        py::arg("k"), py::arg("seed") = 123);
  m.def("check_equivalence_k1",
        [](std::uint64_t seed) {
          const auto c = check_equivalence_k1(seed);
          return py::dict(py::arg("alphas") = c.alphas,
                          py::arg("discrepancies") = c.discrepancies,
                          py::arg("ratios") = c.ratios, py::arg("pass") = c.pass);
        },
        py::arg("seed") = 0);
  m.def("check_sign_semantics", [] {
    const auto c = check_sign_semantics();
    return py::dict(py::arg("aligned_nonpositive") = c.aligned_nonpositive,
                    py::arg("orthogonal_zero") = c.orthogonal_zero,
                    py::arg("interfering_nonnegative") = c.interfering_nonnegative,
                    py::arg("update_moves_alpha") = c.update_moves_alpha,
                    py::arg("pass") = c.pass);
  });

  m.def("run_experiment_file", [](const std::string& config_path) {
    const ExperimentConfig cfg = parse_config(config_path);
    const ExperimentResult result = run_experiment(cfg);
    emit_results(result.rows, result.records, cfg.out);
    return results_csv(result.rows);
  });
}
