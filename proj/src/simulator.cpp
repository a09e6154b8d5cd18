#include "cbap/simulator.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "cbap/error.hpp"

namespace cbap {

SectorSchedule SectorSchedule::from(const ModelParams& params) {
  SectorSchedule s;
  s.bi_slots = params.bi_slots;
  std::int64_t start = 0;
  for (auto len : params.cbap_split) {
    s.windows.push_back({start, len});
    start += len;
  }
  return s;
}

double SectorCounters::empirical_tau() const {
  if (contention_steps == 0 || n_k == 0) return 0.0;
  return static_cast<double>(attempts) /
         (static_cast<double>(n_k) * static_cast<double>(contention_steps));
}

std::uint64_t station_seed(std::uint64_t run_seed, int station_id) {
  // splitmix64 finaliser over (seed, id)
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(station_id) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

class SectorRun {
 public:
  SectorRun(const ModelParams& params, const TimingDurations& timings, int sector,
            int first_id, std::uint64_t seed, std::int64_t first_window)
      : params_(params), timings_(timings) {
    counters_.n_k = params.sector_populations[sector];
    counters_.cbap_slots_per_bi = params.cbap_split[sector];
    stations_.resize(counters_.n_k);
    for (int s = 0; s < counters_.n_k; ++s) {
      auto& st = stations_[s];
      st.id = first_id + s;
      st.sector = sector;
      st.rng.seed(station_seed(seed, st.id));
      st.hol_since = first_window;
      draw(st);
    }
  }

  // Runs one CBAP window of `length` slots starting at absolute slot `base`.
  void run_window(std::int64_t base, std::int64_t length) {
    const auto nf = timings_.n_frame_slots;
    const auto nc = timings_.n_collision_slots;
    std::int64_t idle = 0, successes = 0, collisions = 0;
    std::int64_t t = 0;
    std::vector<Station*> transmitters;
    while (t < length) {
      const auto remaining = length - t;
      transmitters.clear();
      if (remaining >= nf)
        for (auto& st : stations_)
          if (st.counter == 0) transmitters.push_back(&st);

      if (transmitters.empty()) {
        int j_min = std::numeric_limits<int>::max();
        for (const auto& st : stations_)
          if (st.counter >= 1) j_min = std::min(j_min, st.counter);
        // Last idle-run length after which a station reaching zero still has
        // room for a whole frame exchange.
        const auto reachable = length - nf - t;
        std::int64_t run = 0;
        if (j_min != std::numeric_limits<int>::max() && j_min <= reachable) {
          run = j_min;
          for (auto& st : stations_)
            if (st.counter >= 1) count_down(st, j_min);
        } else {
          // Nobody can start a frame exchange before the window closes: the
          // rest is idle and counters stop at one (deferral near the boundary).
          run = remaining;
          for (auto& st : stations_)
            if (st.counter >= 1)
              count_down(st, static_cast<int>(std::min<std::int64_t>(st.counter - 1, run)));
        }
        idle += run;
        counters_.contention_steps += run;
        t += run;
        continue;
      }

      ++counters_.contention_steps;
      counters_.attempts += static_cast<std::int64_t>(transmitters.size());
      for (auto* st : transmitters)
        if (st->decrements != st->drawn_counter) ++counters_.freeze_violations;

      if (transmitters.size() == 1) {
        auto& st = *transmitters.front();
        t += nf;
        ++successes;
        counters_.delays.push_back(static_cast<double>(base + t - st.hol_since) * params_.slot_time);
        counters_.payload_time += timings_.e_payload;
        counters_.busy_time += static_cast<double>(nf) * params_.slot_time;
        st.stage = 0;
        st.hol_since = base + t;
        draw(st);
      } else {
        t += nc;
        ++collisions;
        counters_.busy_time += static_cast<double>(nc) * params_.slot_time;
        for (auto* st : transmitters) {
          if (++st->stage > params_.m) {
            ++counters_.dropped;
            st->stage = 0;
            st->hol_since = base + t;
            if (params_.drop_policy == DropPolicy::kImmediateAttempt) {
              st->counter = 0;
              st->drawn_counter = 0;
              st->decrements = 0;
              continue;
            }
          }
          draw(*st);
        }
      }
    }
    counters_.idle_slots += idle;
    counters_.successes += successes;
    counters_.collisions += collisions;
    counters_.busy_slots += successes * nf + collisions * nc;
    if (idle + successes * nf + collisions * nc != length) ++counters_.conservation_violations;
  }

  SectorCounters take() { return std::move(counters_); }

 private:
  void draw(Station& st) {
    std::uniform_int_distribution<int> dist(0, params_.window(st.stage) - 1);
    st.counter = dist(st.rng);
    st.drawn_counter = st.counter;
    st.decrements = 0;
  }

  static void count_down(Station& st, int slots) {
    st.counter -= slots;
    st.decrements += slots;
  }

  const ModelParams& params_;
  const TimingDurations& timings_;
  std::vector<Station> stations_;
  SectorCounters counters_;
};

}  // namespace

SimStats run_simulation(const ModelParams& params, const TimingDurations& timings,
                        std::uint64_t seed, std::int64_t num_bi) {
  params.validate();
  if (num_bi < 1) throw Error(ErrorKind::kInvalidParameter, "num_bi must be >= 1");
  // Same feasibility rule as the analytical model.
  derive_sector_models(params, timings);

  const auto schedule = SectorSchedule::from(params);
  SimStats stats;
  stats.num_bi = num_bi;
  stats.seed = seed;
  int first_id = 0;
  for (int k = 0; k < params.q; ++k) {
    const auto& window = schedule.windows[k];
    SectorRun run(params, timings, k, first_id, seed, window.start);
    for (std::int64_t bi = 0; bi < num_bi; ++bi)
      run.run_window(bi * schedule.bi_slots + window.start, window.length);
    stats.sectors.push_back(run.take());
    first_id += params.sector_populations[k];
  }
  return stats;
}

PerformanceReport empirical_report(const SimStats& stats, const ModelParams& params) {
  PerformanceReport report;
  std::vector<SectorShare> shares;
  double delay_sum = 0.0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
  for (const auto& c : stats.sectors) {
    SectorPerformance perf;
    perf.n_k = c.n_k;
    perf.cbap_slots = c.cbap_slots_per_bi;
    const double cbap_time = c.cbap_time(stats.num_bi, params.slot_time);
    perf.utilization = cbap_time > 0.0 ? c.payload_time / cbap_time : 0.0;
    if (!c.delays.empty()) {
      const double sum = std::accumulate(c.delays.begin(), c.delays.end(), 0.0);
      perf.mean_delay = sum / static_cast<double>(c.delays.size());
      delay_sum += sum;
    }
    const auto departed = c.successes + c.dropped;
    perf.drop_probability =
        departed > 0 ? static_cast<double>(c.dropped) / static_cast<double>(departed) : 0.0;
    delivered += static_cast<std::int64_t>(c.delays.size());
    dropped += c.dropped;
    shares.push_back({perf.utilization, perf.cbap_slots});
    report.sectors.push_back(std::move(perf));
  }
  report.utilization = aggregate_utilization(shares);
  if (delivered > 0) report.mean_delay = delay_sum / static_cast<double>(delivered);
  report.drop_probability = delivered + dropped > 0
                                ? static_cast<double>(dropped) / static_cast<double>(delivered + dropped)
                                : 0.0;
  return report;
}

}  // namespace cbap
