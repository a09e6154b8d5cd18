#pragma once

#include <cstddef>
#include <vector>

#include "cbap/markov_core.hpp"

namespace cbap {

struct ChainState {
  int stage = 0;
  int counter = 0;
  int h = 0;  // 0 contention, -1 suspended

  friend bool operator==(const ChainState&, const ChainState&) = default;
};

/// Explicit per-station backoff chain built transition by transition.
/// Rows are stored sparsely; `dense()` materialises the full matrix.
class ExplicitChain {
 public:
  struct Transition {
    std::size_t to;
    double probability;
  };

  ExplicitChain(std::vector<int> widths, std::vector<std::vector<Transition>> rows);

  std::size_t state_count() const { return rows_.size(); }
  const std::vector<int>& widths() const { return widths_; }
  std::size_t index(const ChainState& s) const;
  ChainState state(std::size_t index) const;
  const std::vector<Transition>& row(std::size_t index) const { return rows_[index]; }

  double probability(const ChainState& from, const ChainState& to) const;
  std::vector<double> dense() const;  // row-major, state_count^2
  // Largest |row sum - 1|.
  double max_row_defect() const;

 private:
  std::vector<int> widths_;
  std::vector<std::size_t> stage_offsets_;
  std::vector<std::vector<Transition>> rows_;
};

inline constexpr std::size_t kMaxOracleStates = 100000;
inline constexpr std::size_t kDirectSolveLimit = 2000;

ExplicitChain build_chain(double p, double p_b, const SectorModel& sector, int w0, int m,
                          const ChainOptions& options = {});

// p_b = p, as at every fixed point.
inline ExplicitChain build_chain(double p, const SectorModel& sector, int w0, int m,
                                 const ChainOptions& options = {}) {
  return build_chain(p, p, sector, w0, m, options);
}

enum class StationaryMethod { kAuto, kDirect, kPowerIteration };

SteadyStateVector stationary_distribution(const ExplicitChain& chain, double tol = 1e-12,
                                          StationaryMethod method = StationaryMethod::kAuto);

// max_s |(pi P)(s) - pi(s)|
double stationary_residual(const ExplicitChain& chain, const SteadyStateVector& pi);

}  // namespace cbap
