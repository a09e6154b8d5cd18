// cbap: analytical model, simulator and sweeps for sectored CBAP contention.
//
// Exit codes: 0 success, 1 config error, 2 infeasible model, 3 validation failure.

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cbap/error.hpp"
#include "cbap/harness.hpp"
#include "cbap/model_config.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitValidation = 3;
constexpr double kValidationThreshold = 1e-6;

struct CommonOptions {
  std::string config;
  std::optional<int> n, q, w0, m;
  std::optional<double> cbap_fraction, bi_ms;
  std::string out;
  int jobs = 1;
};

struct RunOptions {
  std::string seeds = "0";
  std::int64_t num_bi = 200;
  std::string mode = "analytic";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key = value configuration file");
  cmd->add_option("--n", o.n, "total number of stations");
  cmd->add_option("--q", o.q, "number of sectors");
  cmd->add_option("--w0", o.w0, "minimum contention window");
  cmd->add_option("--m", o.m, "retry limit");
  cmd->add_option("--cbap-fraction", o.cbap_fraction, "CBAP share of the beacon interval");
  cmd->add_option("--bi-ms", o.bi_ms, "beacon interval in milliseconds");
  cmd->add_option("--out", o.out, "output path (default stdout)");
  cmd->add_option("--jobs", o.jobs, "parallel workers")->check(CLI::PositiveNumber);
}

void add_run(CLI::App* cmd, RunOptions& r, bool with_mode) {
  cmd->add_option("--seeds", r.seeds, "comma list or a..b range of seeds");
  cmd->add_option("--num-bi", r.num_bi, "beacon intervals per simulation run")
      ->check(CLI::PositiveNumber);
  if (with_mode)
    cmd->add_option("--mode", r.mode, "analytic, sim or both")
        ->check(CLI::IsMember({"analytic", "sim", "both"}));
}

std::string format_number(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

cbap::Settings layered_settings(const CommonOptions& o) {
  cbap::Settings settings;
  if (!o.config.empty()) settings = cbap::load_settings_file(o.config);
  cbap::Settings flags;
  if (o.n) flags["n"] = std::to_string(*o.n);
  if (o.q) flags["q"] = std::to_string(*o.q);
  if (o.w0) flags["w0"] = std::to_string(*o.w0);
  if (o.m) flags["m"] = std::to_string(*o.m);
  if (o.cbap_fraction) {
    flags["cbap_fraction"] = format_number(*o.cbap_fraction);
    settings.erase("cbap_slots");
    settings.erase("cbap_split");
  }
  if (o.bi_ms) {
    flags["bi_ms"] = format_number(*o.bi_ms);
    settings.erase("bi_slots");
  }
  // Population and split lists from a file no longer fit once n or q change.
  if (o.n || o.q) settings.erase("sector_populations");
  if (o.q) settings.erase("cbap_split");
  return cbap::merge_settings(std::move(settings), flags);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  if (auto dots = text.find(".."); dots != std::string::npos) {
    const auto first = std::stoull(text.substr(0, dots));
    const auto last = std::stoull(text.substr(dots + 2));
    if (last < first) throw cbap::Error(cbap::ErrorKind::kConfig, "empty seed range");
    for (auto s = first; s <= last; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      seeds.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw cbap::Error(cbap::ErrorKind::kConfig, "bad seed `" + item + "`");
    }
  }
  if (seeds.empty()) throw cbap::Error(cbap::ErrorKind::kConfig, "no seeds given");
  return seeds;
}

std::vector<cbap::RunMode> parse_modes(const std::string& mode) {
  if (mode == "analytic") return {cbap::RunMode::kAnalytic};
  if (mode == "sim") return {cbap::RunMode::kSim};
  return {cbap::RunMode::kAnalytic, cbap::RunMode::kSim};
}

std::string provenance(const cbap::ModelParams& params, const std::string& extra) {
  return "effective configuration\n" + cbap::describe_params(params) + extra;
}

template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw cbap::Error(cbap::ErrorKind::kConfig, "cannot write `" + path + "`");
  fn(out);
}

// Rows with a non-ok status mean the model had no operating point.
int status_exit(const std::vector<cbap::ResultRow>& rows) {
  for (const auto& r : rows)
    if (r.status != "ok") return kExitInfeasible;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saturation throughput and MAC delay of sectored CBAP contention"};
  app.require_subcommand(1);

  CommonOptions solve_o, sim_o, sweep_o, validate_o;
  RunOptions sim_r, sweep_r;

  auto* solve = app.add_subcommand("solve", "analytical solution of one configuration");
  add_common(solve, solve_o);

  auto* simulate = app.add_subcommand("simulate", "simulate one configuration over seeds");
  add_common(simulate, sim_o);
  add_run(simulate, sim_r, false);

  auto* sweep = app.add_subcommand("sweep", "sweep one parameter");
  add_common(sweep, sweep_o);
  add_run(sweep, sweep_r, true);
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  sweep->add_option("--param", sweep_param, "n, w0, q or cbap_fraction")->required();
  sweep->add_option("--values", sweep_values, "values of the swept parameter")
      ->required()
      ->delimiter(',');

  auto* validate = app.add_subcommand("validate", "closed form against the explicit chain");
  validate->add_option("--config", validate_o.config, "configuration (window/drop conventions)");
  validate->add_option("--out", validate_o.out, "report path (default stdout)");
  cbap::ValidationGrid grid;
  // A list flag given without values empties that grid axis.
  std::vector<std::function<void()>> clear_if_bare;
  auto grid_axis = [&](const std::string& flag, auto& axis) {
    auto* opt = validate->add_option(flag, axis)->delimiter(',')->expected(0, -1);
    clear_if_bare.push_back([opt, &axis] {
      if (opt->count() == 1 && opt->results().front().empty()) axis.clear();
    });
  };
  grid_axis("--w0-list", grid.w0s);
  grid_axis("--m-list", grid.ms);
  grid_axis("--p-list", grid.ps);
  grid_axis("--ph-list", grid.p_hs);
  grid_axis("--ph-ratio-list", grid.p_h_ratios);
  grid_axis("--pf-list", grid.p_fs);

  auto* compare = app.add_subcommand("compare", "join analytical and simulated CSV rows");
  std::vector<std::string> compare_inputs;
  std::string compare_out;
  compare->add_option("--in", compare_inputs, "result CSV files")->required();
  compare->add_option("--out", compare_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (solve->parsed()) {
      const auto params = cbap::resolve_params(layered_settings(solve_o));
      std::vector<cbap::ResultRow> rows;
      try {
        rows.push_back(cbap::analytic_row(params));
      } catch (const cbap::Error& e) {
        if (!e.is_infeasible()) throw;
        std::cerr << "cbap: " << e.what() << "\n";
        return kExitInfeasible;
      }
      with_output(solve_o.out, [&](std::ostream& out) {
        cbap::write_csv(out, rows, provenance(params, "mode = analytic\n"));
      });
      return 0;
    }

    if (simulate->parsed()) {
      const auto params = cbap::resolve_params(layered_settings(sim_o));
      const auto seeds = parse_seeds(sim_r.seeds);
      cbap::SweepSpec spec;
      // A single-point run is a one-value sweep over n.
      spec.parameter = "n";
      spec.values = {std::to_string(params.n)};
      spec.base = layered_settings(sim_o);
      spec.modes = {cbap::RunMode::kSim};
      spec.seeds = seeds;
      spec.num_bi = sim_r.num_bi;
      spec.jobs = sim_o.jobs;
      auto rows = cbap::run_sweep(spec);
      for (auto& r : rows) r.param.clear(), r.value.clear();
      with_output(sim_o.out, [&](std::ostream& out) {
        cbap::write_csv(out, rows,
                        provenance(params, "mode = sim\nseeds = " + sim_r.seeds +
                                               "\nnum_bi = " + std::to_string(sim_r.num_bi) + "\n"));
      });
      return status_exit(rows);
    }

    if (sweep->parsed()) {
      cbap::SweepSpec spec;
      spec.parameter = sweep_param;
      spec.values = sweep_values;
      spec.base = layered_settings(sweep_o);
      if (sweep_param == "n" || sweep_param == "q") spec.base.erase("sector_populations");
      if (sweep_param == "q") spec.base.erase("cbap_split");
      if (sweep_param == "cbap_fraction") {
        spec.base.erase("cbap_slots");
        spec.base.erase("cbap_split");
      }
      spec.modes = parse_modes(sweep_r.mode);
      spec.seeds = parse_seeds(sweep_r.seeds);
      spec.num_bi = sweep_r.num_bi;
      spec.jobs = sweep_o.jobs;
      const auto base_params = cbap::resolve_params(spec.base);
      const auto rows = cbap::run_sweep(spec);
      std::string values;
      for (const auto& v : sweep_values) values += (values.empty() ? "" : ",") + v;
      with_output(sweep_o.out, [&](std::ostream& out) {
        cbap::write_csv(out, rows,
                        provenance(base_params, "sweep = " + sweep_param + "\nvalues = " + values +
                                                    "\nmode = " + sweep_r.mode +
                                                    "\nseeds = " + sweep_r.seeds + "\nnum_bi = " +
                                                    std::to_string(sweep_r.num_bi) + "\n"));
      });
      return status_exit(rows);
    }

    if (validate->parsed()) {
      for (auto& clear : clear_if_bare) clear();
      if (!validate_o.config.empty()) {
        const auto params = cbap::resolve_params(cbap::load_settings_file(validate_o.config));
        grid.options = cbap::ChainOptions::from(params);
      }
      const auto rows = cbap::validate_grid(grid);
      with_output(validate_o.out, [&](std::ostream& out) {
        cbap::write_validation_report(out, rows);
        out << "# points = " << rows.size() << ", max relative error = "
            << cbap::max_relative_error(rows) << "\n";
      });
      return cbap::max_relative_error(rows) > kValidationThreshold ? kExitValidation : 0;
    }

    if (compare->parsed()) {
      std::vector<cbap::ResultRow> rows;
      for (const auto& path : compare_inputs) {
        std::ifstream in(path);
        if (!in) throw cbap::Error(cbap::ErrorKind::kConfig, "cannot open `" + path + "`");
        auto part = cbap::read_csv(in);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      const auto joined = cbap::compare_rows(rows);
      with_output(compare_out, [&](std::ostream& out) { cbap::write_comparison_csv(out, joined); });
      return 0;
    }
  } catch (const cbap::Error& e) {
    std::cerr << "cbap: " << e.what() << "\n";
    if (e.is_infeasible()) return kExitInfeasible;
    if (e.kind() == cbap::ErrorKind::kConfig || e.kind() == cbap::ErrorKind::kInvalidParameter ||
        e.kind() == cbap::ErrorKind::kTooLarge)
      return kExitConfig;
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "cbap: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
