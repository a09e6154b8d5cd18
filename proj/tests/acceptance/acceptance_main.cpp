// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is the number of failed lines.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cbap/error.hpp"
#include "cbap/harness.hpp"
#include "cbap/markov_core.hpp"
#include "cbap/metrics.hpp"
#include "cbap/simulator.hpp"

using namespace cbap;

namespace {

// Pinned tolerances.
constexpr double kOracleRelTol = 1e-6;
constexpr double kOracleSeconds = 10.0;
constexpr double kSimRelTol = 0.05;
constexpr double kSimSeconds = 300.0;
constexpr double kSectorGainLo = 0.20;
constexpr double kSectorGainHi = 0.60;
constexpr double kDelayRatioLo = 1.6;
constexpr double kDelayRatioHi = 2.4;
constexpr double kStandardErrors = 3.0;
constexpr double kCbapInsensitivity = 0.02;
constexpr double kResidualTol = 1e-10;

constexpr int kSeeds = 10;
constexpr std::int64_t kNumBi = 200;
const std::vector<int> kPopulations{10, 20, 30, 40, 50};

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void note(const std::string& line) { details.push_back(line); }
  void require(bool ok, const std::string& line) {
    pass = pass && ok;
    details.push_back((ok ? "ok    " : "FAIL  ") + line);
  }
};

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ModelParams config(int n, int q, int w0, double cbap_fraction) {
  return resolve_params({{"n", std::to_string(n)},
                         {"q", std::to_string(q)},
                         {"w0", std::to_string(w0)},
                         {"cbap_fraction", fmt("%.17g", cbap_fraction)}});
}

struct Sample {
  double mean = 0.0;
  double se = 0.0;
};

Sample summarize(const std::vector<double>& xs) {
  Sample s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  if (xs.size() > 1) s.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / xs.size());
  return s;
}

// Simulated runs over seeds 0..kSeeds-1, cached by configuration.
struct SimSeries {
  std::vector<double> u;
  std::vector<double> delay;
  std::vector<double> tau;  // sector 0
};

class SimCache {
 public:
  const SimSeries& get(int n, int q, int w0, double cbap_fraction) {
    const auto params = config(n, q, w0, cbap_fraction);
    const auto key = config_hash(params);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const auto timings = derive_timings(params);
    SimSeries series;
    for (int seed = 0; seed < kSeeds; ++seed) {
      const auto stats = run_simulation(params, timings, seed, kNumBi);
      ++runs_;
      for (const auto& c : stats.sectors) {
        conservation_violations_ += c.conservation_violations;
        freeze_violations_ += c.freeze_violations;
      }
      const auto report = empirical_report(stats, params);
      series.u.push_back(report.utilization);
      series.delay.push_back(report.mean_delay.value_or(NAN));
      series.tau.push_back(stats.sectors[0].empirical_tau());
    }
    return cache_.emplace(key, std::move(series)).first->second;
  }

  int runs() const { return runs_; }
  std::int64_t conservation_violations() const { return conservation_violations_; }
  std::int64_t freeze_violations() const { return freeze_violations_; }

 private:
  std::map<std::string, SimSeries> cache_;
  int runs_ = 0;
  std::int64_t conservation_violations_ = 0;
  std::int64_t freeze_violations_ = 0;
};

Outcome oracle_equivalence() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const ValidationGrid grid;  // W0 {4,8}, m {1,2,3}, p {.1,.3,.5}, p_H {0,.01}, p'_H/p_H {1,5}, p_f {0,.6}
  const auto rows = validate_grid(grid);
  const double worst = max_relative_error(rows);
  const double elapsed = seconds_since(t0);
  out.require(rows.size() == 144, fmt("%zu grid points", rows.size()));
  out.require(worst <= kOracleRelTol, fmt("max relative error %.3g (limit %.0e)", worst, kOracleRelTol));
  out.require(elapsed < kOracleSeconds, fmt("runtime %.2f s (limit %.0f s)", elapsed, kOracleSeconds));
  return out;
}

Outcome throughput_vs_simulation(SimCache& sims) {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  std::map<int, double> analytic_at_50, sim_at_50;
  for (int w0 : {7, 15, 31}) {
    for (int n : kPopulations) {
      const double ua = analyze(config(n, 1, w0, 0.4)).utilization;
      const auto us = summarize(sims.get(n, 1, w0, 0.4).u);
      const double rel = std::abs(us.mean - ua) / ua;
      out.require(rel <= kSimRelTol, fmt("W0=%-2d n=%-2d U analytic %.4f sim %.4f +- %.4f rel err %.3f",
                                         w0, n, ua, us.mean, us.se, rel));
      if (n == 50) {
        analytic_at_50[w0] = ua;
        sim_at_50[w0] = us.mean;
      }
    }
  }
  out.require(analytic_at_50[31] > analytic_at_50[15] && analytic_at_50[15] > analytic_at_50[7],
              fmt("n=50 analytic U(31) %.4f > U(15) %.4f > U(7) %.4f", analytic_at_50[31],
                  analytic_at_50[15], analytic_at_50[7]));
  out.require(sim_at_50[31] > sim_at_50[15] && sim_at_50[15] > sim_at_50[7],
              fmt("n=50 simulated U(31) %.4f > U(15) %.4f > U(7) %.4f", sim_at_50[31], sim_at_50[15],
                  sim_at_50[7]));
  const double elapsed = seconds_since(t0);
  out.require(elapsed < kSimSeconds, fmt("runtime %.1f s (limit %.0f s)", elapsed, kSimSeconds));
  return out;
}

Outcome sector_benefit() {
  Outcome out;
  for (int n = 30; n <= 50; n += 5) {
    const double u1 = analyze(config(n, 1, 7, 0.4)).utilization;
    const double u4 = analyze(config(n, 4, 7, 0.4)).utilization;
    const double gain = u4 / u1 - 1.0;
    out.require(gain >= kSectorGainLo && gain <= kSectorGainHi,
                fmt("n=%d U(Q=1) %.4f U(Q=4) %.4f gain %.1f%% (band %.0f%%..%.0f%%)", n, u1, u4,
                    100 * gain, 100 * kSectorGainLo, 100 * kSectorGainHi));
  }
  return out;
}

Outcome delay_doubling(SimCache& sims) {
  Outcome out;
  const auto short_cbap = analyze(config(50, 1, 7, 0.4));
  const auto full_cbap = analyze(config(50, 1, 7, 1.0));
  const double ra = *short_cbap.mean_delay / *full_cbap.mean_delay;
  out.require(ra >= kDelayRatioLo && ra <= kDelayRatioHi,
              fmt("analytic E[D] %.4g s / %.4g s = %.3f (band %.1f..%.1f)", *short_cbap.mean_delay,
                  *full_cbap.mean_delay, ra, kDelayRatioLo, kDelayRatioHi));

  const auto a = summarize(sims.get(50, 1, 7, 0.4).delay);
  const auto b = summarize(sims.get(50, 1, 7, 1.0).delay);
  const double rs = a.mean / b.mean;
  const double se = rs * std::hypot(a.se / a.mean, b.se / b.mean);
  const double gap = std::max({0.0, kDelayRatioLo - rs, rs - kDelayRatioHi});
  out.require(gap <= kStandardErrors * se,
              fmt("simulated E[D] %.4g s / %.4g s = %.3f +- %.3f (band %.1f..%.1f within %.0f SE)",
                  a.mean, b.mean, rs, se, kDelayRatioLo, kDelayRatioHi, kStandardErrors));
  return out;
}

Outcome cbap_insensitivity(SimCache& sims) {
  Outcome out;
  for (int n : kPopulations) {
    const double a = analyze(config(n, 1, 7, 0.4)).utilization;
    const double b = analyze(config(n, 1, 7, 1.0)).utilization;
    out.require(std::abs(a - b) <= kCbapInsensitivity,
                fmt("n=%d analytic |%.4f - %.4f| = %.4f", n, a, b, std::abs(a - b)));
  }
  for (int n : kPopulations) {
    const double a = summarize(sims.get(n, 1, 7, 0.4).u).mean;
    const double b = summarize(sims.get(n, 1, 7, 1.0).u).mean;
    out.require(std::abs(a - b) <= kCbapInsensitivity,
                fmt("n=%d simulated |%.4f - %.4f| = %.4f", n, a, b, std::abs(a - b)));
  }
  return out;
}

Outcome monotonicity() {
  Outcome out;
  const auto base = config(2, 1, 7, 0.4);
  const auto timings = derive_timings(base);
  double last_p = -1.0, last_tau = 2.0, last_delay = 0.0, worst_residual = 0.0;
  bool p_up = true, tau_down = true, delay_up = true;
  for (int n_k = 2; n_k <= 64; ++n_k) {
    auto params = base;
    params.n = n_k;
    params.sector_populations = {n_k};
    const auto sector = derive_sector_models(params, timings)[0];
    const auto sol = solve_fixed_point(sector, params.w0, params.m);
    const auto sp = slot_probabilities(sol.tau, n_k);
    const double delay = expected_delay(sol, sp, timings, sector, params, params.w0, params.m);
    p_up = p_up && sol.p > last_p;
    tau_down = tau_down && sol.tau < last_tau;
    delay_up = delay_up && delay > last_delay;
    worst_residual = std::max(worst_residual, std::abs(sol.residual));
    last_p = sol.p;
    last_tau = sol.tau;
    last_delay = delay;
  }
  out.require(p_up, "p strictly increasing over n_k = 2..64");
  out.require(tau_down, "tau strictly decreasing over n_k = 2..64");
  out.require(delay_up, "E[D] strictly increasing over n_k = 2..64");
  out.require(worst_residual <= kResidualTol,
              fmt("max fixed-point residual %.2g (limit %.0e)", worst_residual, kResidualTol));
  return out;
}

std::string sweep_csv(int jobs) {
  SweepSpec spec;
  spec.parameter = "n";
  spec.values = {"10", "30", "50"};
  spec.modes = {RunMode::kAnalytic, RunMode::kSim};
  spec.seeds = {0, 1, 2};
  spec.num_bi = 50;
  spec.jobs = jobs;
  std::ostringstream out;
  write_csv(out, run_sweep(spec));
  return out.str();
}

Outcome determinism_and_conservation(const SimCache& sims) {
  Outcome out;
  const auto first = sweep_csv(1);
  out.require(first == sweep_csv(1), fmt("repeated sweep CSV byte-identical (%zu bytes)", first.size()));
  out.require(first == sweep_csv(4), "CSV identical with 4 workers");
  out.require(sims.conservation_violations() == 0,
              fmt("time conservation violations over %d runs: %lld", sims.runs(),
                  static_cast<long long>(sims.conservation_violations())));
  out.require(sims.freeze_violations() == 0,
              fmt("counter freeze violations over %d runs: %lld", sims.runs(),
                  static_cast<long long>(sims.freeze_violations())));
  return out;
}

Outcome attempt_rate(SimCache& sims) {
  Outcome out;
  const auto params = config(20, 1, 7, 0.4);
  const auto r = analyze(params);
  const double tau = r.sectors[0].solution->tau;
  const auto s = summarize(sims.get(20, 1, 7, 0.4).tau);
  out.require(std::abs(s.mean - tau) <= kStandardErrors * s.se,
              fmt("n=20 simulated tau %.5f +- %.5f, analytic %.5f (%.1f SE)", s.mean, s.se, tau,
                  std::abs(s.mean - tau) / s.se));
  return out;
}

}  // namespace

int main() {
  SimCache sims;
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
  };
  // Criterion 7 reads the conservation tallies of the runs made for 2-5.
  const std::vector<Criterion> criteria{
      {"1 oracle equivalence", oracle_equivalence},
      {"2 analytic vs simulated throughput", [&] { return throughput_vs_simulation(sims); }},
      {"3 sector benefit Q=4 vs Q=1", sector_benefit},
      {"4 delay doubling at CBAP 0.4", [&] { return delay_doubling(sims); }},
      {"5 throughput insensitive to CBAP", [&] { return cbap_insensitivity(sims); }},
      {"6 monotonicity in n_k", monotonicity},
      {"7 determinism and conservation", [&] { return determinism_and_conservation(sims); }},
      {"- simulated attempt rate at n=20", [&] { return attempt_rate(sims); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.require(false, std::string("error: ") + e.what());
    }
    std::printf("%s  %s\n", out.pass ? "PASS" : "FAIL", c.name.c_str());
    for (const auto& d : out.details) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  std::printf("%d of %zu failed\n", failed, criteria.size());
  return failed;
}
