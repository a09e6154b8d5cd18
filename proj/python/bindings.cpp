#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cbap/chain_oracle.hpp"
#include "cbap/error.hpp"
#include "cbap/harness.hpp"
#include "cbap/markov_core.hpp"
#include "cbap/metrics.hpp"
#include "cbap/model_config.hpp"
#include "cbap/simulator.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

cbap::Settings to_settings(const py::dict& d) {
  cbap::Settings s;
  for (const auto& [k, v] : d) {
    const auto key = py::str(k).cast<std::string>();
    if (py::isinstance<py::bool_>(v)) {
      s[key] = v.cast<bool>() ? "true" : "false";
    } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      std::string joined;
      for (const auto& item : v) joined += (joined.empty() ? "" : ",") + py::str(item).cast<std::string>();
      s[key] = joined;
    } else {
      s[key] = py::str(v).cast<std::string>();
    }
  }
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Markov-chain model and simulator of sectored CBAP contention";

  static py::exception<cbap::Error> error(m, "CbapError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const cbap::Error& e) {
      py::set_error(error, (std::string(cbap::to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::enum_<cbap::WindowConvention>(m, "WindowConvention")
      .value("DOUBLING", cbap::WindowConvention::kDoubling)
      .value("DOUBLING_MINUS_ONE", cbap::WindowConvention::kDoublingMinusOne);
  py::enum_<cbap::DropPolicy>(m, "DropPolicy")
      .value("IMMEDIATE_ATTEMPT", cbap::DropPolicy::kImmediateAttempt)
      .value("FRESH_BACKOFF", cbap::DropPolicy::kFreshBackoff);

  py::class_<cbap::ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("n", &cbap::ModelParams::n)
      .def_readwrite("q", &cbap::ModelParams::q)
      .def_readwrite("sector_populations", &cbap::ModelParams::sector_populations)
      .def_readwrite("w0", &cbap::ModelParams::w0)
      .def_readwrite("m", &cbap::ModelParams::m)
      .def_readwrite("bi_slots", &cbap::ModelParams::bi_slots)
      .def_readwrite("cbap_slots", &cbap::ModelParams::cbap_slots)
      .def_readwrite("cbap_split", &cbap::ModelParams::cbap_split)
      .def_readwrite("slot_time", &cbap::ModelParams::slot_time)
      .def_readwrite("sifs", &cbap::ModelParams::sifs)
      .def_readwrite("difs", &cbap::ModelParams::difs)
      .def_readwrite("rifs", &cbap::ModelParams::rifs)
      .def_readwrite("rts_bytes", &cbap::ModelParams::rts_bytes)
      .def_readwrite("cts_bytes", &cbap::ModelParams::cts_bytes)
      .def_readwrite("ack_bytes", &cbap::ModelParams::ack_bytes)
      .def_readwrite("msdu_bytes", &cbap::ModelParams::msdu_bytes)
      .def_readwrite("control_rate", &cbap::ModelParams::control_rate)
      .def_readwrite("data_rate", &cbap::ModelParams::data_rate)
      .def_readwrite("phy_overhead", &cbap::ModelParams::phy_overhead)
      .def_readwrite("strict_timing", &cbap::ModelParams::strict_timing)
      .def_readwrite("window_convention", &cbap::ModelParams::window_convention)
      .def_readwrite("drop_policy", &cbap::ModelParams::drop_policy)
      .def("validate", &cbap::ModelParams::validate)
      .def_property_readonly("cbap_fraction", &cbap::ModelParams::cbap_fraction)
      .def("__repr__", &cbap::describe_params);

  py::class_<cbap::TimingDurations>(m, "TimingDurations")
      .def_readonly("t_rts", &cbap::TimingDurations::t_rts)
      .def_readonly("t_cts", &cbap::TimingDurations::t_cts)
      .def_readonly("t_ack", &cbap::TimingDurations::t_ack)
      .def_readonly("t_data", &cbap::TimingDurations::t_data)
      .def_readonly("t_suc", &cbap::TimingDurations::t_suc)
      .def_readonly("t_col", &cbap::TimingDurations::t_col)
      .def_readonly("e_payload", &cbap::TimingDurations::e_payload)
      .def_readonly("n_frame_slots", &cbap::TimingDurations::n_frame_slots)
      .def_readonly("n_collision_slots", &cbap::TimingDurations::n_collision_slots);

  py::class_<cbap::SectorModel>(m, "SectorModel")
      .def(py::init<>())
      .def(py::init([](int n_k, double p_h, double p_h_prime, double p_f) {
             return cbap::SectorModel{n_k, p_h, p_h_prime, 1.0 - p_f, p_f, 0};
           }),
           "n_k"_a, "p_h"_a, "p_h_prime"_a, "p_f"_a)
      .def_readwrite("n_k", &cbap::SectorModel::n_k)
      .def_readwrite("p_h", &cbap::SectorModel::p_h)
      .def_readwrite("p_h_prime", &cbap::SectorModel::p_h_prime)
      .def_readwrite("p_r", &cbap::SectorModel::p_r)
      .def_readwrite("p_f", &cbap::SectorModel::p_f)
      .def_readwrite("cbap_k_slots", &cbap::SectorModel::cbap_k_slots);

  py::class_<cbap::FixedPointSolution>(m, "FixedPointSolution")
      .def_readonly("tau", &cbap::FixedPointSolution::tau)
      .def_readonly("p", &cbap::FixedPointSolution::p)
      .def_readonly("b000", &cbap::FixedPointSolution::b000)
      .def_readonly("p_b", &cbap::FixedPointSolution::p_b)
      .def_readonly("eta", &cbap::FixedPointSolution::eta)
      .def_readonly("eta_prime", &cbap::FixedPointSolution::eta_prime)
      .def_readonly("iterations", &cbap::FixedPointSolution::iterations)
      .def_readonly("residual", &cbap::FixedPointSolution::residual);

  py::class_<cbap::SectorPerformance>(m, "SectorPerformance")
      .def_readonly("n_k", &cbap::SectorPerformance::n_k)
      .def_readonly("cbap_slots", &cbap::SectorPerformance::cbap_slots)
      .def_readonly("utilization", &cbap::SectorPerformance::utilization)
      .def_readonly("mean_delay", &cbap::SectorPerformance::mean_delay)
      .def_readonly("drop_probability", &cbap::SectorPerformance::drop_probability)
      .def_readonly("solution", &cbap::SectorPerformance::solution)
      .def_readonly("sigma_avg", &cbap::SectorPerformance::sigma_avg);

  py::class_<cbap::PerformanceReport>(m, "PerformanceReport")
      .def_readonly("sectors", &cbap::PerformanceReport::sectors)
      .def_readonly("utilization", &cbap::PerformanceReport::utilization)
      .def_readonly("mean_delay", &cbap::PerformanceReport::mean_delay)
      .def_readonly("drop_probability", &cbap::PerformanceReport::drop_probability);

  py::class_<cbap::SectorCounters>(m, "SectorCounters")
      .def_readonly("n_k", &cbap::SectorCounters::n_k)
      .def_readonly("successes", &cbap::SectorCounters::successes)
      .def_readonly("collisions", &cbap::SectorCounters::collisions)
      .def_readonly("idle_slots", &cbap::SectorCounters::idle_slots)
      .def_readonly("busy_slots", &cbap::SectorCounters::busy_slots)
      .def_readonly("dropped", &cbap::SectorCounters::dropped)
      .def_readonly("payload_time", &cbap::SectorCounters::payload_time)
      .def_readonly("busy_time", &cbap::SectorCounters::busy_time)
      .def_readonly("delays", &cbap::SectorCounters::delays)
      .def_readonly("conservation_violations", &cbap::SectorCounters::conservation_violations)
      .def_readonly("freeze_violations", &cbap::SectorCounters::freeze_violations)
      .def("empirical_tau", &cbap::SectorCounters::empirical_tau);

  py::class_<cbap::SimStats>(m, "SimStats")
      .def_readonly("sectors", &cbap::SimStats::sectors)
      .def_readonly("num_bi", &cbap::SimStats::num_bi)
      .def_readonly("seed", &cbap::SimStats::seed);

  py::class_<cbap::ValidationRow>(m, "ValidationRow")
      .def_readonly("w0", &cbap::ValidationRow::w0)
      .def_readonly("m", &cbap::ValidationRow::m)
      .def_readonly("p", &cbap::ValidationRow::p)
      .def_readonly("p_h", &cbap::ValidationRow::p_h)
      .def_readonly("p_h_prime", &cbap::ValidationRow::p_h_prime)
      .def_readonly("p_f", &cbap::ValidationRow::p_f)
      .def_readonly("b000_closed", &cbap::ValidationRow::b000_closed)
      .def_readonly("b000_oracle", &cbap::ValidationRow::b000_oracle)
      .def_readonly("b000_rel_err", &cbap::ValidationRow::b000_rel_err)
      .def_readonly("tau_rel_err", &cbap::ValidationRow::tau_rel_err);

  m.def("resolve_params", [](const py::dict& d) { return cbap::resolve_params(to_settings(d)); },
        "settings"_a = py::dict(),
        "Build validated parameters from a dict of configuration keys.");
  m.def("parse_settings", [](const std::string& text) { return cbap::parse_settings(text); });
  m.def("frame_airtime", &cbap::frame_airtime, "bytes"_a, "rate"_a, "phy_overhead"_a = 0.0);
  m.def("derive_timings", &cbap::derive_timings);
  m.def("derive_sector_models", &cbap::derive_sector_models);
  m.def("eta_terms", [](double p_b, double p_f, double p_h, double p_h_prime) {
    const auto e = cbap::eta_terms(p_b, p_f, p_h, p_h_prime);
    return py::make_tuple(e.eta, e.eta_prime);
  }, "p_b"_a, "p_f"_a, "p_h"_a, "p_h_prime"_a);
  m.def("tau_of", &cbap::tau_of, "p"_a, "b000"_a, "m"_a);
  m.def("solve_fixed_point",
        [](const cbap::SectorModel& s, int w0, int m, double tol, int max_iter) {
          return cbap::solve_fixed_point(s, w0, m, {tol, max_iter});
        },
        "sector"_a, "w0"_a, "m"_a, "tol"_a = 1e-10, "max_iter"_a = 200);
  m.def("analyze", [](const cbap::ModelParams& p) { return cbap::analyze(p); });
  m.def("run_simulation",
        [](const cbap::ModelParams& p, std::uint64_t seed, std::int64_t num_bi) {
          py::gil_scoped_release release;
          return cbap::run_simulation(p, cbap::derive_timings(p), seed, num_bi);
        },
        "params"_a, "seed"_a = 0, "num_bi"_a = 200);
  m.def("empirical_report", &cbap::empirical_report);
  m.def("validate_grid",
        [](std::vector<int> w0s, std::vector<int> ms, std::vector<double> ps,
           std::vector<double> p_hs, std::vector<double> ratios, std::vector<double> p_fs) {
          cbap::ValidationGrid g;
          g.w0s = std::move(w0s);
          g.ms = std::move(ms);
          g.ps = std::move(ps);
          g.p_hs = std::move(p_hs);
          g.p_h_ratios = std::move(ratios);
          g.p_fs = std::move(p_fs);
          return cbap::validate_grid(g);
        },
        "w0s"_a = std::vector<int>{4, 8}, "ms"_a = std::vector<int>{1, 2, 3},
        "ps"_a = std::vector<double>{0.1, 0.3, 0.5}, "p_hs"_a = std::vector<double>{0.0, 0.01},
        "p_h_ratios"_a = std::vector<double>{1.0, 5.0}, "p_fs"_a = std::vector<double>{0.0, 0.6});
  m.def("sweep_csv",
        [](const std::string& parameter, const std::vector<std::string>& values,
           const py::dict& base, const std::string& mode, const std::vector<std::uint64_t>& seeds,
           std::int64_t num_bi, int jobs) {
          cbap::SweepSpec spec;
          spec.parameter = parameter;
          spec.values = values;
          spec.base = to_settings(base);
          if (mode == "analytic" || mode == "both") spec.modes.push_back(cbap::RunMode::kAnalytic);
          if (mode == "sim" || mode == "both") spec.modes.push_back(cbap::RunMode::kSim);
          spec.seeds = seeds;
          spec.num_bi = num_bi;
          spec.jobs = jobs;
          std::vector<cbap::ResultRow> rows;
          {
            py::gil_scoped_release release;
            rows = cbap::run_sweep(spec);
          }
          std::ostringstream out;
          cbap::write_csv(out, rows);
          return out.str();
        },
        "parameter"_a, "values"_a, "base"_a = py::dict(), "mode"_a = "analytic",
        "seeds"_a = std::vector<std::uint64_t>{0}, "num_bi"_a = 200, "jobs"_a = 1,
        "Run a parameter sweep and return the result CSV as text.");
}
