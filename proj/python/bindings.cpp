#include "symflow/cli/pipeline.hpp"
#include "symflow/nn/mlp.hpp"
#include "symflow/symmetry/matching.hpp"
#include "symflow/systems/allen_cahn.hpp"
#include "symflow/systems/beam.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace symflow;

namespace {

metrics::TargetDistribution make_target(const std::vector<Vector>& outcomes, const std::vector<double>& weights) {
  if (weights.empty()) return metrics::TargetDistribution::uniform(outcomes);
  metrics::TargetDistribution d{outcomes, weights};
  d.validate();
  return d;
}

nlohmann::json parse_config(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(e.what());
  }
}

struct PyModel {
  std::shared_ptr<cli::TrainedModel> m;
  double final_loss = 0.0;
};

py::dict dataset_to_dict(const systems::Dataset& d) {
  py::dict out;
  out["system"] = d.system;
  out["seed"] = d.seed;
  out["inputs"] = d.inputs;
  out["targets"] = d.targets;
  out["aux"] = d.aux;
  out["aux_columns"] = d.aux_columns;
  out["target_shape"] = d.target_shape;
  out["train"] = d.train;
  out["test"] = d.test;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "symflow core: flow matching for multistable systems";

  py::register_exception<ShapeError>(mod, "ShapeError", PyExc_ValueError);
  py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(mod, "NumericalError", PyExc_ArithmeticError);

  mod.def(
      "mlp_apply",
      [](const std::vector<int>& sizes, const std::string& act, const ParamVector& params, const Vector& x) {
        nn::MlpSpec spec{sizes, nn::activation_from_string(act)};
        return nn::mlp_apply(spec, params, x);
      },
      py::arg("layer_sizes"), py::arg("activation"), py::arg("params"), py::arg("input"));
  mod.def(
      "mlp_gradient",
      [](const std::vector<int>& sizes, const std::string& act, const ParamVector& params, const Vector& x,
         const Vector& upstream) {
        nn::MlpSpec spec{sizes, nn::activation_from_string(act)};
        return nn::mlp_gradient(spec, params, x, upstream);
      },
      py::arg("layer_sizes"), py::arg("activation"), py::arg("params"), py::arg("input"), py::arg("upstream"));
  mod.def(
      "mlp_param_count",
      [](const std::vector<int>& sizes) { return nn::MlpSpec{sizes, nn::Activation::silu}.param_count(); },
      py::arg("layer_sizes"));

  mod.def(
      "best_circular_shift",
      [](const std::vector<double>& x0, const std::vector<double>& x1) { return sym::best_circular_shift_fft(x0, x1); },
      py::arg("x0"), py::arg("x1"));
  mod.def(
      "sign_flip_match",
      [](const Vector& x0, const Vector& x1) {
        const auto r = sym::symmetric_match(x0, x1, sym::SymmetryGroup::sign_flips(static_cast<std::size_t>(x1.size())));
        return py::make_tuple(r.target, r.element);
      },
      py::arg("x0"), py::arg("x1"), "Closest of {x1, -x1} to x0 and the chosen element index.");

  mod.def(
      "wasserstein_1d",
      [](const std::vector<double>& samples, const std::vector<double>& outcomes, const std::vector<double>& weights) {
        std::vector<Vector> o;
        for (double v : outcomes) o.push_back(Vector::Constant(1, v));
        return metrics::wasserstein_1d(samples, make_target(o, weights));
      },
      py::arg("samples"), py::arg("outcomes"), py::arg("weights") = std::vector<double>{});
  mod.def(
      "wasserstein_assignment",
      [](const Matrix& samples, const Matrix& outcomes, const std::vector<double>& weights) {
        std::vector<Vector> s, o;
        for (Eigen::Index i = 0; i < samples.rows(); ++i) s.push_back(samples.row(i).transpose());
        for (Eigen::Index i = 0; i < outcomes.rows(); ++i) o.push_back(outcomes.row(i).transpose());
        return metrics::wasserstein_assignment(s, make_target(o, weights));
      },
      py::arg("samples"), py::arg("outcomes"), py::arg("weights") = std::vector<double>{});
  mod.def("hungarian", &metrics::hungarian, py::arg("cost"));

  mod.def(
      "solve_allen_cahn",
      [](double epsilon, double mu, std::uint64_t seed, int save_stride) {
        systems::ACConfig c;
        c.epsilon = epsilon;
        c.mu = mu;
        c.save_stride = save_stride;
        Rng rng(seed);
        return systems::solve_allen_cahn(c, rng).u;
      },
      py::arg("epsilon") = 0.1, py::arg("mu") = 1.0, py::arg("seed") = 0, py::arg("save_stride") = 100,
      "Field u[t][x] at the saved steps.");

  mod.def(
      "solve_beam",
      [](const std::vector<double>& L, const std::vector<double>& C, const std::vector<double>& K, std::uint64_t seed,
         int steps) {
        systems::BeamSpec spec{static_cast<int>(L.size()), L, C, K};
        Rng rng(seed);
        const auto traj = systems::solve_beam_trajectory(spec, rng, steps);
        py::list positions;
        for (const auto& p : traj.positions) positions.append(p);
        py::dict out;
        out["d"] = traj.d_schedule;
        out["positions"] = positions;
        out["buckling_step"] = traj.buckling_step;
        out["direction"] = traj.direction;
        return out;
      },
      py::arg("L"), py::arg("C"), py::arg("K"), py::arg("seed") = 0, py::arg("steps") = systems::kBeamSteps);

  mod.def(
      "build_dataset",
      [](const std::string& system, std::size_t n_records, std::uint64_t seed) {
        systems::DatasetOptions o;
        o.n_records = n_records;
        o.seed = seed;
        return dataset_to_dict(systems::build_dataset(systems::system_from_string(system), o));
      },
      py::arg("system"), py::arg("n_records") = 0, py::arg("seed") = 0);

  py::class_<PyModel>(mod, "Model")
      .def_property_readonly("system", [](const PyModel& p) { return systems::to_string(p.m->spec.id); })
      .def_property_readonly("trained_steps", [](const PyModel& p) { return p.m->trained_steps; })
      .def_property_readonly("config_hash", [](const PyModel& p) { return p.m->config_hash; })
      .def_property_readonly("final_loss", [](const PyModel& p) { return p.final_loss; })
      .def(
          "predict",
          [](const PyModel& p, const Vector& input, std::size_t n, std::uint64_t seed, int num_steps) {
            Rng rng(seed);
            flow::SamplerConfig s;
            s.num_steps = num_steps;
            return cli::predict(*p.m, input, n, rng, s);
          },
          py::arg("input"), py::arg("n") = 100, py::arg("seed") = 0, py::arg("num_steps") = 100)
      .def("save", [](const PyModel& p, const std::string& path) { cli::save_model(path, *p.m); });

  mod.def(
      "train",
      [](const std::string& config_json) {
        const auto config = cli::RunConfig::from_json(parse_config(config_json));
        const auto data = cli::generate_dataset(config);
        flow::TrainResult r;
        PyModel out;
        {
          py::gil_scoped_release release;
          out.m = std::make_shared<cli::TrainedModel>(cli::train_model(config, data, &r));
        }
        out.final_loss = r.history.empty() ? 0.0 : r.history.back().mean_loss;
        return out;
      },
      py::arg("config_json"), "Generates the dataset in memory and trains a model.");
  mod.def(
      "load_model", [](const std::string& path) { return PyModel{std::make_shared<cli::TrainedModel>(cli::load_model(path))}; },
      py::arg("path"));
  mod.def(
      "evaluate",
      [](const PyModel& p, const std::string& config_json) {
        const auto config = cli::RunConfig::from_json(parse_config(config_json));
        const auto data = cli::generate_dataset(config);
        const auto report = cli::evaluate_system(*p.m, data, config.eval, config.sampler);
        return report.to_json().dump();
      },
      py::arg("model"), py::arg("config_json"), "Report as a JSON string.");
  mod.def(
      "config_hash",
      [](const std::string& config_json) { return cli::RunConfig::from_json(parse_config(config_json)).hash(); },
      py::arg("config_json"));
}
