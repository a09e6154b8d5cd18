#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cbap/markov_core.hpp"
#include "cbap/model_config.hpp"

namespace cbap {

enum class RunMode { kAnalytic, kSim };

const char* to_string(RunMode mode);

/// One CSV row: an analytical evaluation or one simulation seed of a config.
struct ResultRow {
  RunMode mode = RunMode::kAnalytic;
  std::string param;  // swept parameter, empty for single-point runs
  std::string value;
  std::string config_hash;
  std::optional<std::uint64_t> seed;
  int n = 0;
  int q = 0;
  int w0 = 0;
  int m = 0;
  double cbap_fraction = 0.0;
  std::vector<double> u_sectors;
  double u = 0.0;
  std::optional<double> mean_delay_s;
  double drop_prob = 0.0;
  std::optional<std::int64_t> num_bi;
  std::string status = "ok";  // "ok" or an error kind
};

// 16 hex digits of FNV-1a over the canonical parameter dump.
std::string config_hash(const ModelParams& params);

ResultRow analytic_row(const ModelParams& params, const SolverSettings& solver = {});
ResultRow sim_row(const ModelParams& params, std::uint64_t seed, std::int64_t num_bi);

struct SweepSpec {
  std::string parameter;  // n | w0 | q | cbap_fraction
  std::vector<std::string> values;
  Settings base;
  std::vector<RunMode> modes;
  std::vector<std::uint64_t> seeds{0};
  std::int64_t num_bi = 200;
  int jobs = 1;

  void validate() const;
};

// Rows sorted by swept value, then mode, then seed. Infeasible points produce a
// row whose status names the error.
std::vector<ResultRow> run_sweep(const SweepSpec& spec);

const std::vector<std::string>& csv_columns();
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows,
               const std::string& comment_header = {});
std::vector<ResultRow> read_csv(std::istream& in);

/// Analytical vs simulated results of one configuration.
struct ComparisonRow {
  std::string param;
  std::string value;
  std::string config_hash;
  double u_analytic = 0.0;
  double u_sim = 0.0;
  double u_sim_se = 0.0;
  double u_rel_err = 0.0;
  std::optional<double> delay_analytic;
  std::optional<double> delay_sim;
  std::optional<double> delay_rel_err;
  int seeds = 0;
};

std::vector<ComparisonRow> compare_rows(const std::vector<ResultRow>& rows);
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

// ---------------------------------------------------------------------------
// Closed form vs explicit chain.

struct ValidationGrid {
  std::vector<int> w0s{4, 8};
  std::vector<int> ms{1, 2, 3};
  std::vector<double> ps{0.1, 0.3, 0.5};
  std::vector<double> p_hs{0.0, 0.01};
  std::vector<double> p_h_ratios{1.0, 5.0};  // p'_H = ratio * p_H
  std::vector<double> p_fs{0.0, 0.6};
  ChainOptions options;

  std::size_t size() const {
    return w0s.size() * ms.size() * ps.size() * p_hs.size() * p_h_ratios.size() * p_fs.size();
  }
};

struct ValidationRow {
  int w0 = 0;
  int m = 0;
  double p = 0.0;
  double p_h = 0.0;
  double p_h_prime = 0.0;
  double p_f = 0.0;
  double b000_closed = 0.0;
  double b000_oracle = 0.0;
  double b000_rel_err = 0.0;
  double tau_closed = 0.0;
  double tau_oracle = 0.0;
  double tau_rel_err = 0.0;
  double max_entry_abs_diff = 0.0;
};

std::vector<ValidationRow> validate_grid(const ValidationGrid& grid);
double max_relative_error(const std::vector<ValidationRow>& rows);
void write_validation_report(std::ostream& out, const std::vector<ValidationRow>& rows);

}  // namespace cbap
