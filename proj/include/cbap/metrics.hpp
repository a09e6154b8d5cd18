#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cbap/markov_core.hpp"
#include "cbap/model_config.hpp"

namespace cbap {

/// Channel-state probabilities of one contention slot. The `po_*` triple is the
/// view of a tagged station, i.e. of the other n_k - 1 stations only.
struct SlotProbabilities {
  double p_idle = 1.0;
  double p_suc = 0.0;
  double p_col = 0.0;
  double po_idle = 1.0;
  double po_suc = 0.0;
  double po_col = 0.0;
};

SlotProbabilities slot_probabilities(double tau, int n_k);

// Fraction of contention time carrying successful payload.
double sector_utilization(const SlotProbabilities& sp, const TimingDurations& timings,
                          double slot_time);

struct SectorShare {
  double utilization = 0.0;
  std::int64_t cbap_slots = 0;
};

// CBAP-time weighted mean of the per-sector utilizations.
double aggregate_utilization(const std::vector<SectorShare>& per_sector);

// Mean real time of one chain step, suspension included.
double sigma_avg(const SlotProbabilities& sp, const TimingDurations& timings,
                 const SectorModel& sector, const ModelParams& params);

// P(TX = i | success) for i = 0..m.
std::vector<double> success_stage_distribution(double p, int m);

// Mean MAC delay of a packet, conditional on its eventual success.
double expected_delay(const FixedPointSolution& sol, const SlotProbabilities& sp,
                      const TimingDurations& timings, const SectorModel& sector,
                      const ModelParams& params, int w0, int m);

struct SectorPerformance {
  int n_k = 0;
  std::int64_t cbap_slots = 0;
  double utilization = 0.0;
  std::optional<double> mean_delay;  // seconds; empty when undefined
  double drop_probability = 0.0;
  // Analytical diagnostics; absent for empirical reports.
  std::optional<FixedPointSolution> solution;
  std::optional<double> sigma_avg;
};

struct PerformanceReport {
  std::vector<SectorPerformance> sectors;
  double utilization = 0.0;
  std::optional<double> mean_delay;
  double drop_probability = 0.0;
};

// Solves every sector of `params` and evaluates its metrics.
PerformanceReport analyze(const ModelParams& params, const SolverSettings& solver = {});

}  // namespace cbap
