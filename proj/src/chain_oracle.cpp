#include "cbap/chain_oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "cbap/error.hpp"

namespace cbap {

ExplicitChain::ExplicitChain(std::vector<int> widths, std::vector<std::vector<Transition>> rows)
    : widths_(std::move(widths)), rows_(std::move(rows)) {
  std::size_t off = 0;
  for (int w : widths_) {
    stage_offsets_.push_back(off);
    off += 2 * static_cast<std::size_t>(w) - 1;
  }
  stage_offsets_.push_back(off);
}

// Layout per stage: counters 0..W-1 with h = 0, then counters 1..W-1 with h = -1.
std::size_t ExplicitChain::index(const ChainState& s) const {
  const auto w = static_cast<std::size_t>(widths_[s.stage]);
  const auto j = static_cast<std::size_t>(s.counter);
  return stage_offsets_[s.stage] + (s.h == 0 ? j : w + j - 1);
}

ChainState ExplicitChain::state(std::size_t index) const {
  int stage = 0;
  while (stage_offsets_[stage + 1] <= index) ++stage;
  const auto local = index - stage_offsets_[stage];
  const auto w = static_cast<std::size_t>(widths_[stage]);
  if (local < w) return {stage, static_cast<int>(local), 0};
  return {stage, static_cast<int>(local - w + 1), -1};
}

double ExplicitChain::probability(const ChainState& from, const ChainState& to) const {
  const auto target = index(to);
  double p = 0.0;
  for (const auto& t : rows_[index(from)])
    if (t.to == target) p += t.probability;
  return p;
}

std::vector<double> ExplicitChain::dense() const {
  const auto n = state_count();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (const auto& t : rows_[r]) out[r * n + t.to] += t.probability;
  return out;
}

double ExplicitChain::max_row_defect() const {
  double worst = 0.0;
  for (const auto& row : rows_) {
    double s = 0.0;
    for (const auto& t : row) s += t.probability;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

ExplicitChain build_chain(double p, double p_b, const SectorModel& sector, int w0, int m,
                          const ChainOptions& options) {
  if (!(p >= 0.0 && p <= 1.0) || !(p_b >= 0.0 && p_b < 1.0))
    throw Error(ErrorKind::kInvalidParameter, "p and p_b must be probabilities");
  const auto widths = stage_widths(w0, m, options.windows);
  std::size_t count = 0;
  for (int w : widths) count += 2 * static_cast<std::size_t>(w) - 1;
  if (count > kMaxOracleStates) {
    std::ostringstream msg;
    msg << "explicit chain for w0=" << w0 << ", m=" << m << " has " << count
        << " states (limit " << kMaxOracleStates << "); use the closed form instead";
    throw Error(ErrorKind::kTooLarge, msg.str());
  }

  std::vector<std::vector<ExplicitChain::Transition>> rows(count);
  ExplicitChain shape(widths, {});
  auto idx = [&](int i, int j, int h) { return shape.index({i, j, h}); };
  auto add = [&](std::size_t from, std::size_t to, double prob) {
    if (prob != 0.0) rows[from].push_back({to, prob});
  };

  for (int i = 0; i <= m; ++i) {
    const int w = widths[i];
    // Head of line: the attempt resolves in one step.
    const auto hol = idx(i, 0, 0);
    for (int j = 0; j < widths[0]; ++j) add(hol, idx(0, j, 0), (1.0 - p) / widths[0]);
    if (i < m) {
      for (int j = 0; j < widths[i + 1]; ++j) add(hol, idx(i + 1, j, 0), p / widths[i + 1]);
    } else if (options.drop == DropPolicy::kImmediateAttempt) {
      add(hol, idx(0, 0, 0), p);
    } else {
      for (int j = 0; j < widths[0]; ++j) add(hol, idx(0, j, 0), p / widths[0]);
    }
    for (int j = 1; j < w; ++j) {
      const double suspend = j == 1 ? sector.p_h_prime : sector.p_h;
      const auto here = idx(i, j, 0);
      const auto away = idx(i, j, -1);
      add(here, away, suspend);
      add(here, here, p_b);
      add(here, idx(i, j - 1, 0), 1.0 - p_b - suspend);
      add(away, here, sector.p_r);
      add(away, away, sector.p_f);
    }
  }
  return ExplicitChain(widths, std::move(rows));
}

namespace {

SteadyStateVector to_vector(const ExplicitChain& chain, const Eigen::VectorXd& pi) {
  SteadyStateVector v(chain.widths());
  for (std::size_t s = 0; s < chain.state_count(); ++s) {
    const auto st = chain.state(s);
    v.ref(st.stage, st.counter, st.h) = pi[static_cast<Eigen::Index>(s)];
  }
  return v;
}

Eigen::VectorXd solve_direct(const ExplicitChain& chain) {
  const auto n = static_cast<Eigen::Index>(chain.state_count());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (const auto& t : chain.row(static_cast<std::size_t>(r)))
      a(static_cast<Eigen::Index>(t.to), r) += t.probability;
  a -= Eigen::MatrixXd::Identity(n, n);
  // pi (P - I) = 0 has rank n-1; the last balance equation is replaced by the
  // normalisation.
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[n - 1] = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible())
    throw Error(ErrorKind::kOracleFailure, "stationary system is singular (chain not irreducible?)");
  return lu.solve(rhs);
}

Eigen::VectorXd solve_power(const ExplicitChain& chain, double tol) {
  const auto n = static_cast<Eigen::Index>(chain.state_count());
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd next(n);
  constexpr long kMaxIter = 5'000'000;
  for (long iter = 0; iter < kMaxIter; ++iter) {
    // Lazy chain (P + I) / 2 shares the stationary vector and is aperiodic.
    next = 0.5 * pi;
    for (Eigen::Index r = 0; r < n; ++r) {
      const double mass = 0.5 * pi[r];
      for (const auto& t : chain.row(static_cast<std::size_t>(r)))
        next[static_cast<Eigen::Index>(t.to)] += mass * t.probability;
    }
    next /= next.sum();
    const double change = (next - pi).lpNorm<1>();
    pi.swap(next);
    if (change <= tol * 1e-2) return pi;
  }
  throw Error(ErrorKind::kOracleFailure, "power iteration did not converge");
}

}  // namespace

SteadyStateVector stationary_distribution(const ExplicitChain& chain, double tol,
                                          StationaryMethod method) {
  if (chain.state_count() == 0) throw Error(ErrorKind::kOracleFailure, "empty chain");
  if (method == StationaryMethod::kAuto)
    method = chain.state_count() <= kDirectSolveLimit ? StationaryMethod::kDirect
                                                      : StationaryMethod::kPowerIteration;
  if (method == StationaryMethod::kDirect && chain.state_count() > kMaxOracleStates)
    throw Error(ErrorKind::kTooLarge, "dense solve requested for an oversized chain");

  const Eigen::VectorXd pi =
      method == StationaryMethod::kDirect ? solve_direct(chain) : solve_power(chain, tol);
  if (!pi.allFinite()) throw Error(ErrorKind::kOracleFailure, "stationary solve produced NaN");
  auto v = to_vector(chain, pi);
  const double residual = stationary_residual(chain, v);
  if (residual > std::max(tol, 1e-12) * 1e3) {
    std::ostringstream msg;
    msg << "stationary residual " << residual << " exceeds tolerance " << tol;
    throw Error(ErrorKind::kOracleFailure, msg.str());
  }
  return v;
}

double stationary_residual(const ExplicitChain& chain, const SteadyStateVector& pi) {
  const auto n = chain.state_count();
  std::vector<double> weights(n), image(n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto st = chain.state(s);
    weights[s] = pi.at(st.stage, st.counter, st.h);
  }
  for (std::size_t s = 0; s < n; ++s)
    for (const auto& t : chain.row(s)) image[t.to] += weights[s] * t.probability;
  double worst = std::abs(pi.sum() - 1.0);
  for (std::size_t s = 0; s < n; ++s) worst = std::max(worst, std::abs(image[s] - weights[s]));
  return worst;
}

}  // namespace cbap
