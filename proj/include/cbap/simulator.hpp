#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cbap/metrics.hpp"
#include "cbap/model_config.hpp"

namespace cbap {

/// One saturated station. `drawn_counter` and `decrements` let the run verify
/// that a counter survives suspensions untouched.
struct Station {
  int id = 0;
  int sector = 0;
  int stage = 0;
  int counter = 0;
  std::int64_t hol_since = 0;  // absolute slot at which the current packet became head of line
  int drawn_counter = 0;
  int decrements = 0;
  std::mt19937_64 rng;
};

struct CbapWindow {
  std::int64_t start = 0;  // slot offset inside the BI
  std::int64_t length = 0;
};

/// Round-robin sector windows inside every beacon interval, sector 0 first.
/// Everything after the last window is opaque non-CBAP time.
struct SectorSchedule {
  std::vector<CbapWindow> windows;
  std::int64_t bi_slots = 0;

  static SectorSchedule from(const ModelParams& params);
};

struct SectorCounters {
  int n_k = 0;
  std::int64_t cbap_slots_per_bi = 0;
  std::int64_t successes = 0;
  std::int64_t collisions = 0;
  std::int64_t idle_slots = 0;
  std::int64_t busy_slots = 0;
  std::int64_t attempts = 0;          // sum of transmitters over all events
  std::int64_t contention_steps = 0;  // idle slots + transmission events
  std::int64_t dropped = 0;
  double busy_time = 0.0;     // seconds
  double payload_time = 0.0;  // seconds
  std::vector<double> delays;  // seconds, successful packets only
  // Windows whose idle/success/collision slots did not add up to the window.
  std::int64_t conservation_violations = 0;
  // Transmissions whose counter had not been counted down exactly.
  std::int64_t freeze_violations = 0;

  double cbap_time(std::int64_t num_bi, double slot_time) const {
    return static_cast<double>(num_bi * cbap_slots_per_bi) * slot_time;
  }
  // Attempts per station per contention step.
  double empirical_tau() const;
};

struct SimStats {
  std::vector<SectorCounters> sectors;
  std::int64_t num_bi = 0;
  std::uint64_t seed = 0;
};

// Derives the station RNG seed from the run seed; stable under adding stations.
std::uint64_t station_seed(std::uint64_t run_seed, int station_id);

SimStats run_simulation(const ModelParams& params, const TimingDurations& timings,
                        std::uint64_t seed, std::int64_t num_bi);

PerformanceReport empirical_report(const SimStats& stats, const ModelParams& params);

}  // namespace cbap
