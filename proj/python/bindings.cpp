#include <sstream>

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "acpo/advantage.hpp"
#include "acpo/cli.hpp"
#include "acpo/error.hpp"
#include "acpo/infotheory.hpp"
#include "acpo/objective.hpp"
#include "acpo/policy.hpp"
#include "acpo/segmentation.hpp"
#include "acpo/trace.hpp"
#include "acpo/trainer.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

py::dict sweep(std::uint64_t seed, std::size_t joints, std::size_t chains) {
  const auto s = acpo::info::run_theorem_sweep(seed, joints, chains);
  return py::dict("passed"_a = s.passed(), "joints_checked"_a = s.joints_checked,
                  "joints_failed"_a = s.joints_failed, "chains_checked"_a = s.chains_checked,
                  "chains_failed"_a = s.chains_failed, "max_identity_error"_a = s.max_identity_error);
}

double mutual_information(const std::vector<std::vector<double>>& table) {
  const std::size_t rows = table.size();
  const std::size_t cols = rows ? table[0].size() : 0;
  std::vector<double> flat;
  for (const auto& r : table) {
    if (r.size() != cols) throw acpo::ValidationError("ragged joint table");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return acpo::info::mutual_information(acpo::info::JointDistribution(rows, cols, std::move(flat)));
}

std::vector<std::size_t> segment(const std::string& record, double quantile, std::size_t min_interval,
                                 bool markers, const std::vector<int>& boundary_ids) {
  acpo::SegmentationConfig cfg;
  cfg.entropy_quantile = quantile;
  cfg.min_interval = min_interval;
  if (markers) cfg.marker_lexicon = acpo::default_marker_lexicon();
  cfg.boundary_token_ids = {boundary_ids.begin(), boundary_ids.end()};
  return acpo::segment_trajectory(acpo::parse_trace_record(record), cfg).boundaries();
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = acpo::run_cli(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_acpo, m) {
  m.doc() = "attribution-weighted policy optimization on toy arithmetic chains";

  auto& base = py::register_exception<acpo::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<acpo::ValidationError>(m, "ValidationError", base.ptr());

  m.def("k3", &acpo::k3_kl_estimator, "logp_theta"_a, "logp_ref"_a);
  m.def("clipped_surrogate_term", &acpo::clipped_surrogate_term, "ratio"_a, "adv"_a, "epsilon"_a);
  m.def("group_base_advantage",
        [](const std::vector<double>& rewards) { return acpo::group_base_advantage(rewards); }, "rewards"_a);
  m.def(
      "modulation_weight",
      [](double h, double c, double a, double hmin, double hmax, double beta, double gamma, double theta) {
        acpo::ModulationParams p;
        p.beta = beta;
        p.gamma = gamma;
        p.theta = theta;
        return acpo::modulation_weight(h, c, a, hmin, hmax, p);
      },
      "h"_a, "c"_a, "a_base"_a, "hmin"_a = 0.0, "hmax"_a = 1.0, "beta"_a = 0.5, "gamma"_a = 0.3, "theta"_a = 0.0);

  m.def("entropy", [](const std::vector<double>& p) { return acpo::info::entropy(p); }, "dist"_a);
  m.def("mutual_information", &mutual_information, "table"_a);
  m.def("theorem_sweep", &sweep, "seed"_a = 0, "joints"_a = 1000, "chains"_a = 500);

  m.def("segment", &segment, "record"_a, "quantile"_a = 0.05, "min_interval"_a = 1, "markers"_a = true,
        "boundary_ids"_a = std::vector<int>{});

  py::class_<acpo::PolicySnapshot>(m, "Policy")
      .def(py::init([](int modulus) { return acpo::make_base_policy(modulus); }), "modulus"_a = 10)
      .def_static("load", &acpo::load_checkpoint_file, "path"_a)
      .def("save", [](const acpo::PolicySnapshot& p, const std::string& path) { acpo::save_checkpoint_file(path, p); },
           "path"_a)
      .def_property_readonly("parameter_count", &acpo::PolicySnapshot::parameter_count)
      .def_property_readonly("version", &acpo::PolicySnapshot::version)
      .def(
          "acc_at_k",
          [](const acpo::PolicySnapshot& p, std::size_t tasks, int difficulty, std::size_t k, double temperature,
             double top_p, std::uint64_t seed) {
            const auto pool = acpo::generate_task_pool(tasks, difficulty, seed, p.vocab().modulus());
            py::gil_scoped_release release;
            return acpo::evaluate_acc_at_k(p, pool, k, temperature, top_p, seed);
          },
          "tasks"_a = 100, "difficulty"_a = 3, "k"_a = 8, "temperature"_a = 0.8, "top_p"_a = 0.95, "seed"_a = 0)
      .def(py::self == py::self);

  m.def("run_cli", &run_cli, "args"_a);
}
