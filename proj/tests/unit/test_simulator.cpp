#include <doctest.h>

#include <cmath>
#include <vector>

#include "cbap/error.hpp"
#include "cbap/simulator.hpp"

using namespace cbap;

namespace {

ModelParams single_sector(int n, std::int64_t bi_slots, std::int64_t cbap_slots) {
  ModelParams p;
  p.n = n;
  p.sector_populations = {n};
  p.bi_slots = bi_slots;
  p.cbap_slots = cbap_slots;
  p.cbap_split = {cbap_slots};
  return p;
}

// Attempt rate and collision probability of two saturated stations from the
// exact joint chain of their (stage, counter) pairs. One step is an idle slot
// or a transmission event; a drop goes straight back to (0, 0).
std::pair<double, double> two_station_exact(int w0, int m) {
  struct S {
    int i, j;
  };
  std::vector<S> states;
  std::vector<int> offset;
  for (int i = 0; i <= m; ++i) {
    offset.push_back(static_cast<int>(states.size()));
    for (int j = 0; j < (w0 << i); ++j) states.push_back({i, j});
  }
  const int n = static_cast<int>(states.size());
  auto after = [&](int i, bool collided) {
    std::vector<std::pair<int, double>> out;
    if (!collided || i < m) {
      const int next = collided ? i + 1 : 0;
      const int w = w0 << next;
      for (int j = 0; j < w; ++j) out.push_back({offset[next] + j, 1.0 / w});
    } else {
      out.push_back({0, 1.0});
    }
    return out;
  };
  std::vector<std::vector<std::pair<int, double>>> rows(n * n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      auto& row = rows[a * n + b];
      const S sa = states[a], sb = states[b];
      if (sa.j > 0 && sb.j > 0) {
        row.push_back({(a - 1) * n + (b - 1), 1.0});
      } else if (sa.j == 0 && sb.j == 0) {
        for (auto [x, px] : after(sa.i, true))
          for (auto [y, py] : after(sb.i, true)) row.push_back({x * n + y, px * py});
      } else if (sa.j == 0) {
        for (auto [x, px] : after(sa.i, false)) row.push_back({x * n + b, px});
      } else {
        for (auto [y, py] : after(sb.i, false)) row.push_back({a * n + y, py});
      }
    }
  }
  // Power iteration on the lazy chain.
  std::vector<double> pi(n * n, 1.0 / (n * n)), next(n * n);
  for (int it = 0; it < 200000; ++it) {
    for (int k = 0; k < n * n; ++k) next[k] = 0.5 * pi[k];
    for (int k = 0; k < n * n; ++k)
      for (auto [to, pr] : rows[k]) next[to] += 0.5 * pi[k] * pr;
    double change = 0.0;
    for (int k = 0; k < n * n; ++k) change += std::abs(next[k] - pi[k]);
    pi.swap(next);
    if (change < 1e-15) break;
  }
  double attempt = 0.0, collide = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (states[a].j == 0) {
        attempt += pi[a * n + b];
        if (states[b].j == 0) collide += pi[a * n + b];
      }
  return {attempt, collide / attempt};
}

}  // namespace

TEST_CASE("lone station renewal cycle") {
  const auto p = single_sector(1, 20000, 20000);
  const auto t = derive_timings(p);
  const auto stats = run_simulation(p, t, 7, 1000);
  const auto& c = stats.sectors[0];
  CHECK(c.collisions == 0);
  const double cycle = t.n_frame_slots * p.slot_time + (p.w0 - 1) / 2.0 * p.slot_time;
  const double u = empirical_report(stats, p).utilization;
  CHECK(u == doctest::Approx(t.e_payload / cycle).epsilon(0.02));
}

TEST_CASE("two stations match the exact joint chain") {
  const auto [tau, p] = two_station_exact(4, 1);
  auto params = single_sector(2, 200000, 200000);
  params.w0 = 4;
  params.m = 1;
  const auto stats = run_simulation(params, derive_timings(params), 3, 20);
  const auto& c = stats.sectors[0];
  CHECK(c.empirical_tau() == doctest::Approx(tau).epsilon(0.01));
  CHECK(1.0 - static_cast<double>(c.successes) / c.attempts == doctest::Approx(p).epsilon(0.01));
}

TEST_CASE("same seed, same statistics") {
  const auto p = resolve_params({{"n", "20"}, {"q", "2"}});
  const auto t = derive_timings(p);
  const auto a = run_simulation(p, t, 42, 30);
  const auto b = run_simulation(p, t, 42, 30);
  const auto c = run_simulation(p, t, 43, 30);
  REQUIRE(a.sectors.size() == b.sectors.size());
  for (std::size_t k = 0; k < a.sectors.size(); ++k) {
    CHECK(a.sectors[k].successes == b.sectors[k].successes);
    CHECK(a.sectors[k].collisions == b.sectors[k].collisions);
    CHECK(a.sectors[k].idle_slots == b.sectors[k].idle_slots);
    CHECK(a.sectors[k].dropped == b.sectors[k].dropped);
    CHECK(a.sectors[k].payload_time == b.sectors[k].payload_time);
    CHECK(a.sectors[k].delays == b.sectors[k].delays);
  }
  CHECK(a.sectors[0].delays != c.sectors[0].delays);
}

TEST_CASE("station streams do not depend on the population") {
  CHECK(station_seed(5, 3) == station_seed(5, 3));
  CHECK(station_seed(5, 3) != station_seed(5, 4));
  CHECK(station_seed(5, 3) != station_seed(6, 3));
}

TEST_CASE("time conservation and counter freezing") {
  for (const auto& settings : std::vector<Settings>{{{"n", "10"}},
                                                    {{"n", "50"}},
                                                    {{"n", "30"}, {"q", "4"}},
                                                    {{"n", "7"}, {"cbap_fraction", "0.05"}},
                                                    {{"n", "40"}, {"cbap_fraction", "1"}}}) {
    const auto p = resolve_params(settings);
    const auto stats = run_simulation(p, derive_timings(p), 1, 50);
    for (const auto& c : stats.sectors) {
      CHECK(c.conservation_violations == 0);
      CHECK(c.freeze_violations == 0);
      CHECK(c.idle_slots + c.busy_slots == 50 * c.cbap_slots_per_bi);
      CHECK(c.payload_time <= c.busy_time);
      CHECK(c.busy_time <= c.cbap_time(50, p.slot_time) * (1 + 1e-12));
    }
  }
}

TEST_CASE("window shorter than a frame exchange") {
  const auto p = single_sector(3, 20000, 10);
  try {
    run_simulation(p, derive_timings(p), 0, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInfeasibleCbap);
  }
}

TEST_CASE("report without successes") {
  const auto p = single_sector(2, 20000, 8000);
  SimStats stats;
  stats.num_bi = 1;
  stats.sectors.push_back({});
  stats.sectors[0].n_k = 2;
  stats.sectors[0].cbap_slots_per_bi = 8000;
  const auto r = empirical_report(stats, p);
  CHECK(r.utilization == 0.0);
  CHECK_FALSE(r.mean_delay.has_value());
  CHECK_FALSE(r.sectors[0].mean_delay.has_value());
}

TEST_CASE("report from synthetic counters") {
  const auto p = single_sector(2, 20000, 8000);  // 40 ms of CBAP per BI
  SimStats stats;
  stats.num_bi = 1;
  stats.sectors.push_back({});
  stats.sectors[0].cbap_slots_per_bi = 8000;
  stats.sectors[0].payload_time = 0.010;
  stats.sectors[0].delays = {0.001, 0.003};
  const auto r = empirical_report(stats, p);
  CHECK(r.utilization == doctest::Approx(0.25));
  CHECK(*r.mean_delay == doctest::Approx(0.002));
}

TEST_CASE("four sectors beat one at forty stations") {
  const auto u = [](int q) {
    const auto p = resolve_params({{"n", "40"}, {"q", std::to_string(q)}});
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed)
      sum += empirical_report(run_simulation(p, derive_timings(p), seed, 100), p).utilization;
    return sum / 3;
  };
  CHECK(u(4) > u(1));
}
