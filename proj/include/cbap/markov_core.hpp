#pragma once

#include <vector>

#include "cbap/model_config.hpp"

namespace cbap {

/// Structural options of the backoff chain that the closed form and the
/// explicit chain must agree on.
struct ChainOptions {
  WindowConvention windows = WindowConvention::kDoubling;
  DropPolicy drop = DropPolicy::kImmediateAttempt;

  static ChainOptions from(const ModelParams& params) {
    return {params.window_convention, params.drop_policy};
  }
};

struct EtaTerms {
  double eta = 1.0;
  double eta_prime = 1.0;
};

struct FixedPointSolution {
  double tau = 0.0;
  double p = 0.0;
  double b000 = 0.0;
  double p_b = 0.0;
  double eta = 1.0;
  double eta_prime = 1.0;
  int iterations = 0;
  double residual = 0.0;
  // Final bisection bracket; G(lo) and G(hi) never share a strict sign.
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

/// Stationary probabilities b(i, j, h) of the three-dimensional chain.
/// h = 0 is contention, h = -1 suspension. Suspended companions exist only for
/// j >= 1; `at(i, 0, -1)` reads as zero.
class SteadyStateVector {
 public:
  SteadyStateVector() = default;
  explicit SteadyStateVector(std::vector<int> widths);

  int max_stage() const { return static_cast<int>(widths_.size()) - 1; }
  int width(int stage) const { return widths_[stage]; }
  const std::vector<int>& widths() const { return widths_; }

  double at(int stage, int counter, int h) const;
  double& ref(int stage, int counter, int h);

  double sum() const;
  // Sum of b(i, 0, 0) over all stages.
  double head_of_line_sum() const;
  // Total probability mass in the suspended (h = -1) states.
  double suspended_sum() const;
  std::size_t state_count() const;

 private:
  std::size_t offset(int stage, int counter, int h) const;

  std::vector<int> widths_;
  std::vector<std::size_t> stage_offsets_;
  std::vector<double> entries_;
};

// Conditional collision probability seen by one of `n_k` saturated stations.
double collision_probability(double tau, int n_k);

EtaTerms eta_terms(double p_b, double p_f, double p_h, double p_h_prime);

// Normalisation constant b(0,0,0) in closed form. Valid for the doubling window
// convention; `drop` selects whether dropped packets re-enter through the
// stage-0 backoff states.
double b000_closed_form(double p, const SectorModel& sector, int w0, int m,
                        const EtaTerms& eta, DropPolicy drop = DropPolicy::kImmediateAttempt);

// The same normalisation accumulated stage by stage for arbitrary window sizes.
double b000_stage_sum(double p, const std::vector<int>& widths, const EtaTerms& eta,
                      DropPolicy drop);

// Dispatches to the closed form when the convention allows it.
double normalization_b000(double p, const SectorModel& sector, int w0, int m,
                          const EtaTerms& eta, const ChainOptions& options);

double tau_of(double p, double b000, int m);

std::vector<int> stage_widths(int w0, int m, WindowConvention convention);

struct SolverSettings {
  double tol = 1e-10;
  int max_iter = 200;
};

// Bisection on tau for tau = tau_of(p(tau), b000(tau)).
FixedPointSolution solve_fixed_point(const SectorModel& sector, int w0, int m,
                                     const SolverSettings& settings = {},
                                     const ChainOptions& options = {});

// Residual tau_of(p(tau), b000(tau)) - tau of the fixed-point map.
double fixed_point_residual(double tau, const SectorModel& sector, int w0, int m,
                            const ChainOptions& options = {});

// Full stationary vector at a given (p, p_b). The solver sets p_b = p.
SteadyStateVector steady_state_at(double p, double p_b, const SectorModel& sector, int w0,
                                  int m, const ChainOptions& options = {});

SteadyStateVector steady_state_vector(const FixedPointSolution& sol, const SectorModel& sector,
                                      int w0, int m, const ChainOptions& options = {});

}  // namespace cbap
