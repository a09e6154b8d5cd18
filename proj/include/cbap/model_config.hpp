#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cbap {

// Stage-i contention window size.
//   kDoubling:         W_i = 2^i * W0
//   kDoublingMinusOne: W_i = 2^i * W0 - 1
enum class WindowConvention { kDoubling, kDoublingMinusOne };

// What happens to a station after its packet exhausts the retry limit.
//   kImmediateAttempt: the next packet starts at (0, 0), i.e. it attempts in the
//                      very next contention slot. The stage-0 backoff states
//                      are then fed by successes only.
//   kFreshBackoff:     the next packet draws a stage-0 backoff like any other.
enum class DropPolicy { kImmediateAttempt, kFreshBackoff };

// How the total CBAP is divided between sectors when no explicit split is set.
enum class CbapSplitRule { kEqual, kProportional };

/// Every protocol constant of the model. Durations are seconds, rates bit/s,
/// frame sizes octets, and all `*_slots` values are in units of `slot_time`.
struct ModelParams {
  int n = 10;
  int q = 1;
  std::vector<int> sector_populations{10};
  int w0 = 7;
  int m = 5;
  std::int64_t bi_slots = 20000;
  std::int64_t cbap_slots = 8000;
  std::vector<std::int64_t> cbap_split{8000};

  double slot_time = 5e-6;
  double sifs = 2.5e-6;
  double difs = 13.5e-6;
  double rifs = 9e-6;

  int rts_bytes = 20;
  int cts_bytes = 26;
  int ack_bytes = 14;
  int msdu_bytes = 7995;

  double control_rate = 27.5e6;
  double data_rate = 2e9;
  double phy_overhead = 0.0;

  // When false an extra SIFS is inserted before the ACK in the success time.
  bool strict_timing = true;
  WindowConvention window_convention = WindowConvention::kDoubling;
  DropPolicy drop_policy = DropPolicy::kImmediateAttempt;

  // Throws Error(kInvalidParameter) naming the first violated invariant.
  void validate() const;

  double cbap_fraction() const {
    return static_cast<double>(cbap_slots) / static_cast<double>(bi_slots);
  }

  // Window size at backoff stage `stage`.
  int window(int stage) const;
};

int window_size(int w0, int stage, WindowConvention convention);

struct TimingDurations {
  double t_rts = 0.0;
  double t_cts = 0.0;
  double t_ack = 0.0;
  double t_data = 0.0;
  double t_suc = 0.0;
  double t_col = 0.0;
  double e_payload = 0.0;
  std::int64_t n_frame_slots = 0;  // N^F = ceil(t_suc / slot_time)
  std::int64_t n_collision_slots = 0;  // ceil(t_col / slot_time)
};

/// Per-sector suspension constants of the chain. `cbap_k_slots` is zero when
/// the model is built directly from probabilities (oracle grids).
struct SectorModel {
  int n_k = 1;
  double p_h = 0.0;
  double p_h_prime = 0.0;
  double p_r = 1.0;
  double p_f = 0.0;
  std::int64_t cbap_k_slots = 0;
};

double frame_airtime(int bytes, double rate, double phy_overhead);

TimingDurations derive_timings(const ModelParams& params);

std::vector<SectorModel> derive_sector_models(const ModelParams& params,
                                              const TimingDurations& timings);

// Round-robin assignment of n stations to q sectors.
std::vector<int> round_robin_populations(int n, int q);

// Splits `cbap_slots` over sectors; the remainder of the integer division goes
// one slot each to the first sectors.
std::vector<std::int64_t> split_cbap(std::int64_t cbap_slots,
                                     const std::vector<int>& populations,
                                     CbapSplitRule rule);

// ---------------------------------------------------------------------------
// Key/value configuration.

/// Explicitly set configuration keys. Values stay textual until resolution so
/// that layering (defaults < file < flags) is a plain map merge.
using Settings = std::map<std::string, std::string>;

// Parses `key = value` lines with `#` comments. Unknown or duplicate keys are
// errors.
Settings parse_settings(const std::string& text, const std::string& origin = "<text>");
Settings load_settings_file(const std::string& path);

// Overlays `top` on `base`; keys in `top` win.
Settings merge_settings(Settings base, const Settings& top);

// Builds validated parameters. Besides every ModelParams field the resolver
// understands `bi_ms`, `cbap_fraction` and `cbap_split_rule`, which only apply
// when `bi_slots`, `cbap_slots` and `cbap_split` are not given.
ModelParams resolve_params(const Settings& settings);

// Canonical `key = value` dump of every ModelParams field, one per line.
std::string describe_params(const ModelParams& params);

const std::vector<std::string>& known_setting_keys();

}  // namespace cbap
