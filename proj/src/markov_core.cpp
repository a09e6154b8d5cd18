#include "cbap/markov_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cbap/error.hpp"

namespace cbap {

namespace {

// sum_{z=0}^{terms-1} ratio^z, summed explicitly so ratio = 1 needs no special case.
double geometric_sum(double ratio, int terms) {
  double sum = 0.0;
  double term = 1.0;
  for (int z = 0; z < terms; ++z) {
    sum += term;
    term *= ratio;
  }
  return sum;
}

double power(double base, int exponent) {
  double out = 1.0;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

// Share of the head-of-line flow that re-enters stage 0 through its backoff
// states: successes only, or successes plus drops.
double stage0_reentry(double p, int m, DropPolicy drop) {
  return drop == DropPolicy::kImmediateAttempt ? 1.0 - power(p, m + 1) : 1.0;
}

double suspend_probability(const SectorModel& sector, int counter) {
  return counter == 1 ? sector.p_h_prime : sector.p_h;
}

}  // namespace

// ---------------------------------------------------------------------------
// SteadyStateVector

SteadyStateVector::SteadyStateVector(std::vector<int> widths) : widths_(std::move(widths)) {
  stage_offsets_.reserve(widths_.size() + 1);
  std::size_t off = 0;
  for (int w : widths_) {
    stage_offsets_.push_back(off);
    off += 2 * static_cast<std::size_t>(w);
  }
  stage_offsets_.push_back(off);
  entries_.assign(off, 0.0);
}

std::size_t SteadyStateVector::offset(int stage, int counter, int h) const {
  return stage_offsets_[stage] + 2 * static_cast<std::size_t>(counter) + (h == 0 ? 0 : 1);
}

double SteadyStateVector::at(int stage, int counter, int h) const {
  if (stage < 0 || stage > max_stage() || counter < 0 || counter >= widths_[stage]) return 0.0;
  if (h == -1 && counter == 0) return 0.0;
  return entries_[offset(stage, counter, h)];
}

double& SteadyStateVector::ref(int stage, int counter, int h) {
  if (stage < 0 || stage > max_stage() || counter < 0 || counter >= widths_[stage] ||
      (h != 0 && h != -1) || (h == -1 && counter == 0)) {
    throw Error(ErrorKind::kInvalidParameter, "steady-state index out of range");
  }
  return entries_[offset(stage, counter, h)];
}

double SteadyStateVector::sum() const {
  return std::accumulate(entries_.begin(), entries_.end(), 0.0);
}

double SteadyStateVector::head_of_line_sum() const {
  double s = 0.0;
  for (int i = 0; i <= max_stage(); ++i) s += at(i, 0, 0);
  return s;
}

double SteadyStateVector::suspended_sum() const {
  double s = 0.0;
  for (int i = 0; i <= max_stage(); ++i)
    for (int j = 1; j < widths_[i]; ++j) s += at(i, j, -1);
  return s;
}

std::size_t SteadyStateVector::state_count() const {
  std::size_t count = 0;
  for (int w : widths_) count += 2 * static_cast<std::size_t>(w) - 1;
  return count;
}

// ---------------------------------------------------------------------------

double collision_probability(double tau, int n_k) {
  return 1.0 - std::pow(1.0 - tau, n_k - 1);
}

EtaTerms eta_terms(double p_b, double p_f, double p_h, double p_h_prime) {
  const double decrement = 1.0 - p_b - p_h;
  const double decrement_j1 = 1.0 - p_b - p_h_prime;
  if (!(decrement > 0.0) || !(decrement_j1 > 0.0) || !(p_f < 1.0)) {
    std::ostringstream msg;
    msg << "backoff counter can no longer decrement (p_b=" << p_b << ", p_H=" << p_h
        << ", p'_H=" << p_h_prime << ", p_f=" << p_f << ")";
    throw Error(ErrorKind::kSaturationInfeasible, msg.str());
  }
  const double return_rate = 1.0 - p_f;
  return {(1.0 + p_h / return_rate) / decrement, (1.0 + p_h_prime / return_rate) / decrement_j1};
}

double b000_closed_form(double p, const SectorModel& /*sector*/, int w0, int m,
                        const EtaTerms& eta, DropPolicy drop) {
  const double w = w0;
  const double e = eta.eta;
  const double ep = eta.eta_prime;
  const double bracket = 1.0 +
                         (w - 1.0) / w * (ep + e * (w - 2.0) / 2.0) * stage0_reentry(p, m, drop) +
                         p * geometric_sum(p, m) * (1.0 + ep - 1.5 * e) +
                         p / (2.0 * w) * geometric_sum(p / 2.0, m) * (e - ep) +
                         e * p * w * geometric_sum(2.0 * p, m);
  if (!(bracket >= 1.0) || !std::isfinite(bracket)) {
    throw Error(ErrorKind::kInternalConsistency,
                "normalisation sum fell below one; inputs are outside the model's domain");
  }
  return 1.0 / bracket;
}

double b000_stage_sum(double p, const std::vector<int>& widths, const EtaTerms& eta,
                      DropPolicy drop) {
  const int m = static_cast<int>(widths.size()) - 1;
  double bracket = 0.0;
  double hol = 1.0;  // b(i,0,0) / b(0,0,0)
  for (int i = 0; i <= m; ++i) {
    const double w = widths[i];
    const double reentry = i == 0 ? stage0_reentry(p, m, drop) : 1.0;
    // Mass of counters 1..W-1 (both h values) per unit of entry rate times W.
    const double backoff = ((w - 1.0) * eta.eta_prime + eta.eta * (w - 1.0) * (w - 2.0) / 2.0) / w;
    bracket += hol * (1.0 + reentry * backoff);
    hol *= p;
  }
  if (!(bracket >= 1.0) || !std::isfinite(bracket)) {
    throw Error(ErrorKind::kInternalConsistency,
                "normalisation sum fell below one; inputs are outside the model's domain");
  }
  return 1.0 / bracket;
}

std::vector<int> stage_widths(int w0, int m, WindowConvention convention) {
  std::vector<int> widths(m + 1);
  for (int i = 0; i <= m; ++i) widths[i] = window_size(w0, i, convention);
  return widths;
}

double normalization_b000(double p, const SectorModel& sector, int w0, int m,
                          const EtaTerms& eta, const ChainOptions& options) {
  if (options.windows == WindowConvention::kDoubling)
    return b000_closed_form(p, sector, w0, m, eta, options.drop);
  return b000_stage_sum(p, stage_widths(w0, m, options.windows), eta, options.drop);
}

double tau_of(double p, double b000, int m) { return b000 * geometric_sum(p, m + 1); }

double fixed_point_residual(double tau, const SectorModel& sector, int w0, int m,
                            const ChainOptions& options) {
  const double p = collision_probability(tau, sector.n_k);
  const auto eta = eta_terms(p, sector.p_f, sector.p_h, sector.p_h_prime);
  const double b000 = normalization_b000(p, sector, w0, m, eta, options);
  return tau_of(p, b000, m) - tau;
}

FixedPointSolution solve_fixed_point(const SectorModel& sector, int w0, int m,
                                     const SolverSettings& settings,
                                     const ChainOptions& options) {
  if (!(settings.tol > 0.0)) throw Error(ErrorKind::kInvalidParameter, "tolerance must be positive");
  if (sector.n_k < 1) throw Error(ErrorKind::kInvalidParameter, "sector needs at least one station");
  if (w0 < 2 || m < 0) throw Error(ErrorKind::kInvalidParameter, "need w0 >= 2 and m >= 0");

  constexpr double kEdge = 1e-12;
  double lo = kEdge;
  double hi = 1.0 - kEdge;
  // Above tau_max the busy probability leaves no room for a counter decrement
  // and the chain is undefined; G tends to -tau as tau approaches it. Without
  // suspension the same edge sits at p = 1.
  const double suspend = std::max({sector.p_h, sector.p_h_prime, kEdge});
  if (sector.n_k > 1) {
    if (suspend >= 1.0)
      throw Error(ErrorKind::kSaturationInfeasible, "suspension probability reaches one");
    const double tau_max = 1.0 - std::pow(suspend, 1.0 / (sector.n_k - 1));
    hi = std::min(hi, tau_max * (1.0 - 1e-9));
  }
  auto g = [&](double tau) { return fixed_point_residual(tau, sector, w0, m, options); };

  double g_lo = g(lo);
  double g_hi = g(hi);
  if (g_lo * g_hi > 0.0) {
    std::ostringstream msg;
    msg << "fixed-point map has no sign change on [" << lo << ", " << hi << "]";
    throw Error(ErrorKind::kNoFixedPoint, msg.str());
  }

  for (int iter = 1; iter <= settings.max_iter; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = g(mid);
    if ((g_mid < 0.0) == (g_lo < 0.0) && g_mid != 0.0) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
      g_hi = g_mid;
    }
    if (std::abs(g_mid) <= settings.tol && hi - lo <= settings.tol) {
      FixedPointSolution sol;
      sol.tau = mid;
      sol.p = collision_probability(mid, sector.n_k);
      sol.p_b = sol.p;
      const auto eta = eta_terms(sol.p_b, sector.p_f, sector.p_h, sector.p_h_prime);
      sol.eta = eta.eta;
      sol.eta_prime = eta.eta_prime;
      sol.b000 = normalization_b000(sol.p, sector, w0, m, eta, options);
      sol.iterations = iter;
      sol.residual = std::abs(g_mid);
      sol.bracket_lo = lo;
      sol.bracket_hi = hi;
      return sol;
    }
  }
  std::ostringstream msg;
  msg << "bisection did not converge within " << settings.max_iter << " iterations; bracket ["
      << lo << ", " << hi << "]";
  throw ConvergenceError(msg.str(), lo, hi);
}

SteadyStateVector steady_state_at(double p, double p_b, const SectorModel& sector, int w0,
                                  int m, const ChainOptions& options) {
  const auto widths = stage_widths(w0, m, options.windows);
  const auto eta = eta_terms(p_b, sector.p_f, sector.p_h, sector.p_h_prime);
  const double b000 = normalization_b000(p, sector, w0, m, eta, options);

  SteadyStateVector v(widths);
  double hol_total = 0.0;
  for (int i = 0; i <= m; ++i) hol_total += power(p, i) * b000;
  const double drop_flow = power(p, m) * b000 * p;

  for (int i = 0; i <= m; ++i) {
    const double w = widths[i];
    const double hol = power(p, i) * b000;
    double entry = 0.0;  // arrival rate into each counter value of stage i
    if (i == 0) {
      double inflow = (1.0 - p) * hol_total;
      if (options.drop == DropPolicy::kFreshBackoff) inflow += drop_flow;
      entry = inflow / w;
    } else {
      entry = p * power(p, i - 1) * b000 / w;
    }
    v.ref(i, 0, 0) = hol;
    for (int j = 1; j < widths[i]; ++j) {
      const double suspend = suspend_probability(sector, j);
      const double contention = (w - j) * entry / (1.0 - p_b - suspend);
      v.ref(i, j, 0) = contention;
      v.ref(i, j, -1) = suspend / (1.0 - sector.p_f) * contention;
    }
  }
  return v;
}

SteadyStateVector steady_state_vector(const FixedPointSolution& sol, const SectorModel& sector,
                                      int w0, int m, const ChainOptions& options) {
  return steady_state_at(sol.p, sol.p_b, sector, w0, m, options);
}

}  // namespace cbap
