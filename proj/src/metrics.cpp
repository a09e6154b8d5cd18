#include "cbap/metrics.hpp"

#include <cmath>

#include "cbap/error.hpp"

namespace cbap {

SlotProbabilities slot_probabilities(double tau, int n_k) {
  if (!(tau > 0.0 && tau < 1.0) || n_k < 1)
    throw Error(ErrorKind::kInvalidParameter, "slot probabilities need 0 < tau < 1 and n_k >= 1");
  SlotProbabilities sp;
  const double idle_other = std::pow(1.0 - tau, n_k - 1);
  sp.p_idle = idle_other * (1.0 - tau);
  sp.p_suc = n_k * tau * idle_other;
  sp.p_col = 1.0 - sp.p_idle - sp.p_suc;
  sp.po_idle = idle_other;
  sp.po_suc = n_k > 1 ? (n_k - 1) * tau * std::pow(1.0 - tau, n_k - 2) : 0.0;
  sp.po_col = 1.0 - sp.po_idle - sp.po_suc;
  return sp;
}

double sector_utilization(const SlotProbabilities& sp, const TimingDurations& timings,
                          double slot_time) {
  const double cycle = sp.p_idle * slot_time + sp.p_suc * timings.t_suc + sp.p_col * timings.t_col;
  return sp.p_suc * timings.e_payload / cycle;
}

double aggregate_utilization(const std::vector<SectorShare>& per_sector) {
  double weighted = 0.0;
  double total = 0.0;
  for (const auto& s : per_sector) {
    if (s.cbap_slots <= 0)
      throw Error(ErrorKind::kInvalidParameter, "sector CBAP share must be positive");
    weighted += s.utilization * static_cast<double>(s.cbap_slots);
    total += static_cast<double>(s.cbap_slots);
  }
  return total > 0.0 ? weighted / total : 0.0;
}

double sigma_avg(const SlotProbabilities& sp, const TimingDurations& timings,
                 const SectorModel& sector, const ModelParams& params) {
  const double in_cbap =
      sp.po_idle * params.slot_time + sp.po_suc * timings.t_suc + sp.po_col * timings.t_col;
  const double outside_slots = static_cast<double>(params.bi_slots - sector.cbap_k_slots);
  return (1.0 - sector.p_h) * in_cbap + sector.p_h * outside_slots * params.slot_time;
}

std::vector<double> success_stage_distribution(double p, int m) {
  std::vector<double> weights(m + 1);
  double total = 0.0;
  double pi = 1.0;
  for (int i = 0; i <= m; ++i) {
    weights[i] = pi;  // p^i (1 - p) / (1 - p^{m+1}) up to the common factor
    total += pi;
    pi *= p;
  }
  for (auto& w : weights) w /= total;
  return weights;
}

double expected_delay(const FixedPointSolution& sol, const SlotProbabilities& sp,
                      const TimingDurations& timings, const SectorModel& sector,
                      const ModelParams& params, int w0, int m) {
  const double decrement = 1.0 - sol.p_b - sector.p_h;
  if (!(decrement > 0.0))
    throw Error(ErrorKind::kSaturationInfeasible, "delay undefined: 1 - p_b - p_H <= 0");
  const double step = sigma_avg(sp, timings, sector, params) / decrement;
  const auto weights = success_stage_distribution(sol.p, m);
  double delay = 0.0;
  double backoff = 0.0;
  for (int i = 0; i <= m; ++i) {
    backoff += (window_size(w0, i, params.window_convention) - 1) / 2.0 * step;
    delay += weights[i] * (i * timings.t_col + timings.t_suc + backoff);
  }
  return delay;
}

PerformanceReport analyze(const ModelParams& params, const SolverSettings& solver) {
  const auto timings = derive_timings(params);
  const auto sectors = derive_sector_models(params, timings);
  const auto options = ChainOptions::from(params);

  PerformanceReport report;
  std::vector<SectorShare> shares;
  double delay_weight = 0.0;
  double delay_sum = 0.0;
  double departures = 0.0;
  double drops = 0.0;
  for (const auto& sector : sectors) {
    const auto sol = solve_fixed_point(sector, params.w0, params.m, solver, options);
    const auto sp = slot_probabilities(sol.tau, sector.n_k);
    SectorPerformance perf;
    perf.n_k = sector.n_k;
    perf.cbap_slots = sector.cbap_k_slots;
    perf.utilization = sector_utilization(sp, timings, params.slot_time);
    perf.mean_delay = expected_delay(sol, sp, timings, sector, params, params.w0, params.m);
    perf.drop_probability = std::pow(sol.p, params.m + 1);
    perf.solution = sol;
    perf.sigma_avg = sigma_avg(sp, timings, sector, params);
    shares.push_back({perf.utilization, perf.cbap_slots});

    // Successful packets per unit of BI time are proportional to U_k N_k.
    const double successes = perf.utilization * static_cast<double>(perf.cbap_slots);
    delay_sum += successes * *perf.mean_delay;
    delay_weight += successes;
    const double departed = successes / (1.0 - perf.drop_probability);
    departures += departed;
    drops += departed * perf.drop_probability;
    report.sectors.push_back(std::move(perf));
  }
  report.utilization = aggregate_utilization(shares);
  if (delay_weight > 0.0) report.mean_delay = delay_sum / delay_weight;
  report.drop_probability = departures > 0.0 ? drops / departures : 0.0;
  return report;
}

}  // namespace cbap
