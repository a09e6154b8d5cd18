#include "cbap/model_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cbap/error.hpp"

namespace cbap {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInfeasibleCbap: return "infeasible-cbap";
    case ErrorKind::kSaturationInfeasible: return "saturation-infeasible";
    case ErrorKind::kNoFixedPoint: return "no-fixed-point";
    case ErrorKind::kConvergenceFailure: return "convergence-failure";
    case ErrorKind::kInternalConsistency: return "internal-consistency";
    case ErrorKind::kTooLarge: return "too-large";
    case ErrorKind::kOracleFailure: return "oracle-failure";
  }
  return "unknown";
}

namespace {

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::kInvalidParameter, what);
}

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorKind::kConfig, what);
}

// Slot counts derived from real durations; the epsilon absorbs representation
// error so that an exact multiple of the slot does not round up.
std::int64_t ceil_slots(double seconds, double slot_time) {
  return static_cast<std::int64_t>(std::ceil(seconds / slot_time - 1e-9));
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

int window_size(int w0, int stage, WindowConvention convention) {
  const int base = w0 << stage;
  return convention == WindowConvention::kDoubling ? base : base - 1;
}

int ModelParams::window(int stage) const {
  return window_size(w0, stage, window_convention);
}

void ModelParams::validate() const {
  if (n < 1) invalid("n must be >= 1");
  if (q < 1) invalid("q must be >= 1");
  if (w0 < 2) invalid("w0 must be >= 2");
  if (m < 0) invalid("m must be >= 0");
  if (m > 16) invalid("m must be <= 16");
  if (static_cast<int>(sector_populations.size()) != q)
    invalid("sector_populations must have q entries");
  if (static_cast<int>(cbap_split.size()) != q)
    invalid("cbap_split must have q entries");
  for (int nk : sector_populations)
    if (nk < 1) invalid("every sector needs at least one station");
  if (std::accumulate(sector_populations.begin(), sector_populations.end(), 0) != n)
    invalid("sector_populations must sum to n");
  for (auto s : cbap_split)
    if (s < 1) invalid("every sector needs a positive CBAP share");
  if (std::accumulate(cbap_split.begin(), cbap_split.end(), std::int64_t{0}) != cbap_slots)
    invalid("cbap_split must sum to cbap_slots");
  if (cbap_slots < 1 || bi_slots < 1) invalid("bi_slots and cbap_slots must be positive");
  if (cbap_slots > bi_slots) invalid("cbap_slots must not exceed bi_slots");
  if (!(slot_time > 0 && sifs > 0 && difs > 0 && rifs > 0))
    invalid("slot_time, sifs, difs and rifs must be positive");
  if (rts_bytes < 1 || cts_bytes < 1 || ack_bytes < 1 || msdu_bytes < 1)
    invalid("frame sizes must be at least one octet");
  if (!(control_rate > 0 && data_rate > 0)) invalid("rates must be positive");
  if (!(phy_overhead >= 0)) invalid("phy_overhead must be non-negative");
}

double frame_airtime(int bytes, double rate, double phy_overhead) {
  if (bytes < 1) invalid("frame must carry at least one octet");
  if (!(rate > 0)) invalid("rate must be positive");
  if (!(phy_overhead >= 0)) invalid("phy_overhead must be non-negative");
  return phy_overhead + 8.0 * bytes / rate;
}

TimingDurations derive_timings(const ModelParams& params) {
  params.validate();
  TimingDurations t;
  t.t_rts = frame_airtime(params.rts_bytes, params.control_rate, params.phy_overhead);
  t.t_cts = frame_airtime(params.cts_bytes, params.control_rate, params.phy_overhead);
  t.t_ack = frame_airtime(params.ack_bytes, params.control_rate, params.phy_overhead);
  t.t_data = frame_airtime(params.msdu_bytes, params.data_rate, params.phy_overhead);
  const int sifs_count = params.strict_timing ? 2 : 3;
  t.t_suc = t.t_rts + sifs_count * params.sifs + t.t_cts + params.difs + t.t_data + t.t_ack;
  t.t_col = t.t_rts + params.sifs + params.difs + params.rifs;
  t.e_payload = t.t_data;
  t.n_frame_slots = std::max<std::int64_t>(1, ceil_slots(t.t_suc, params.slot_time));
  t.n_collision_slots = std::max<std::int64_t>(1, ceil_slots(t.t_col, params.slot_time));
  return t;
}

std::vector<SectorModel> derive_sector_models(const ModelParams& params,
                                              const TimingDurations& timings) {
  params.validate();
  std::vector<SectorModel> sectors;
  sectors.reserve(params.q);
  for (int k = 0; k < params.q; ++k) {
    const auto cbap_k = params.cbap_split[k];
    if (cbap_k <= timings.n_frame_slots) {
      throw Error(ErrorKind::kInfeasibleCbap,
                  "sector " + std::to_string(k) + ": CBAP share of " + std::to_string(cbap_k) +
                      " slots cannot hold a " + std::to_string(timings.n_frame_slots) +
                      "-slot frame exchange");
    }
    SectorModel s;
    s.n_k = params.sector_populations[k];
    s.cbap_k_slots = cbap_k;
    s.p_h = 1.0 / static_cast<double>(cbap_k);
    s.p_h_prime = static_cast<double>(timings.n_frame_slots) / static_cast<double>(cbap_k);
    s.p_r = static_cast<double>(cbap_k) / static_cast<double>(params.bi_slots);
    s.p_f = 1.0 - s.p_r;
    sectors.push_back(s);
  }
  return sectors;
}

std::vector<int> round_robin_populations(int n, int q) {
  if (q < 1) invalid("q must be >= 1");
  std::vector<int> pops(q, 0);
  for (int s = 0; s < n; ++s) ++pops[s % q];
  return pops;
}

std::vector<std::int64_t> split_cbap(std::int64_t cbap_slots,
                                     const std::vector<int>& populations,
                                     CbapSplitRule rule) {
  const auto q = static_cast<std::int64_t>(populations.size());
  if (q < 1) invalid("at least one sector is required");
  std::vector<std::int64_t> split(q, 0);
  if (rule == CbapSplitRule::kEqual) {
    for (auto& s : split) s = cbap_slots / q;
  } else {
    const std::int64_t n = std::accumulate(populations.begin(), populations.end(), std::int64_t{0});
    if (n < 1) invalid("proportional split needs stations");
    for (std::int64_t k = 0; k < q; ++k) split[k] = cbap_slots * populations[k] / n;
  }
  std::int64_t rest = cbap_slots - std::accumulate(split.begin(), split.end(), std::int64_t{0});
  for (std::int64_t k = 0; rest > 0; k = (k + 1) % q, --rest) ++split[k];
  return split;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& known_setting_keys() {
  static const std::vector<std::string> keys = {
      "n", "q", "sector_populations", "w0", "m", "bi_slots", "cbap_slots", "cbap_split",
      "slot_time", "sifs", "difs", "rifs", "rts_bytes", "cts_bytes", "ack_bytes",
      "msdu_bytes", "control_rate", "data_rate", "phy_overhead", "strict_timing",
      "window_convention", "drop_policy",
      // convenience keys
      "bi_ms", "cbap_fraction", "cbap_split_rule"};
  return keys;
}

Settings parse_settings(const std::string& text, const std::string& origin) {
  Settings out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto& keys = known_setting_keys();
  while (std::getline(in, line)) {
    ++lineno;
    const auto where = origin + ":" + std::to_string(lineno) + ": ";
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) config_error(where + "expected `key = value`");
    auto key = trim(std::string_view(body).substr(0, eq));
    auto value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) config_error(where + "missing key");
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      config_error(where + "unknown key `" + key + "`");
    if (!out.emplace(key, value).second) config_error(where + "duplicate key `" + key + "`");
  }
  return out;
}

Settings load_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open config file `" + path + "`");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str(), path);
}

Settings merge_settings(Settings base, const Settings& top) {
  for (const auto& [k, v] : top) base[k] = v;
  return base;
}

namespace {

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end || !std::isfinite(out))
    config_error("key `" + key + "`: `" + v + "` is not a number");
  return out;
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end)
    config_error("key `" + key + "`: `" + v + "` is not an integer");
  return out;
}

std::vector<std::int64_t> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<std::int64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_int(key, trim(item)));
  if (out.empty()) config_error("key `" + key + "`: empty list");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  config_error("key `" + key + "`: `" + v + "` is not a boolean");
}

std::string fmt_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

}  // namespace

ModelParams resolve_params(const Settings& settings) {
  const auto& keys = known_setting_keys();
  for (const auto& [k, v] : settings)
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      config_error("unknown key `" + k + "`");

  auto get = [&](const char* key) -> const std::string* {
    auto it = settings.find(key);
    return it == settings.end() ? nullptr : &it->second;
  };

  ModelParams p;
  auto set_int = [&](const char* key, auto& field) {
    if (auto* v = get(key)) field = static_cast<std::remove_reference_t<decltype(field)>>(parse_int(key, *v));
  };
  auto set_double = [&](const char* key, double& field) {
    if (auto* v = get(key)) field = parse_double(key, *v);
  };

  set_int("n", p.n);
  set_int("q", p.q);
  set_int("w0", p.w0);
  set_int("m", p.m);
  set_double("slot_time", p.slot_time);
  set_double("sifs", p.sifs);
  set_double("difs", p.difs);
  set_double("rifs", p.rifs);
  set_int("rts_bytes", p.rts_bytes);
  set_int("cts_bytes", p.cts_bytes);
  set_int("ack_bytes", p.ack_bytes);
  set_int("msdu_bytes", p.msdu_bytes);
  set_double("control_rate", p.control_rate);
  set_double("data_rate", p.data_rate);
  set_double("phy_overhead", p.phy_overhead);
  if (auto* v = get("strict_timing")) p.strict_timing = parse_bool("strict_timing", *v);
  if (auto* v = get("window_convention")) {
    if (*v == "doubling") p.window_convention = WindowConvention::kDoubling;
    else if (*v == "doubling_minus_one") p.window_convention = WindowConvention::kDoublingMinusOne;
    else config_error("window_convention must be `doubling` or `doubling_minus_one`");
  }
  if (auto* v = get("drop_policy")) {
    if (*v == "immediate_attempt") p.drop_policy = DropPolicy::kImmediateAttempt;
    else if (*v == "fresh_backoff") p.drop_policy = DropPolicy::kFreshBackoff;
    else config_error("drop_policy must be `immediate_attempt` or `fresh_backoff`");
  }
  if (!(p.slot_time > 0)) invalid("slot_time must be positive");

  if (auto* v = get("bi_slots")) {
    p.bi_slots = parse_int("bi_slots", *v);
  } else {
    const double bi_ms = get("bi_ms") ? parse_double("bi_ms", *get("bi_ms")) : 100.0;
    if (!(bi_ms > 0)) invalid("bi_ms must be positive");
    p.bi_slots = std::llround(bi_ms * 1e-3 / p.slot_time);
  }
  if (auto* v = get("cbap_slots")) {
    p.cbap_slots = parse_int("cbap_slots", *v);
  } else {
    const double frac = get("cbap_fraction") ? parse_double("cbap_fraction", *get("cbap_fraction")) : 0.4;
    if (!(frac > 0 && frac <= 1)) invalid("cbap_fraction must lie in (0, 1]");
    p.cbap_slots = std::llround(frac * static_cast<double>(p.bi_slots));
  }

  if (auto* v = get("sector_populations")) {
    auto list = parse_int_list("sector_populations", *v);
    p.sector_populations.assign(list.begin(), list.end());
  } else {
    p.sector_populations = round_robin_populations(p.n, p.q);
  }

  if (auto* v = get("cbap_split")) {
    p.cbap_split = parse_int_list("cbap_split", *v);
  } else {
    auto rule = CbapSplitRule::kEqual;
    if (auto* r = get("cbap_split_rule")) {
      if (*r == "equal") rule = CbapSplitRule::kEqual;
      else if (*r == "proportional") rule = CbapSplitRule::kProportional;
      else config_error("cbap_split_rule must be `equal` or `proportional`");
    }
    if (static_cast<int>(p.sector_populations.size()) != p.q)
      invalid("sector_populations must have q entries");
    p.cbap_split = split_cbap(p.cbap_slots, p.sector_populations, rule);
  }

  p.validate();
  return p;
}

std::string describe_params(const ModelParams& p) {
  std::ostringstream out;
  out << "n = " << p.n << "\n"
      << "q = " << p.q << "\n"
      << "sector_populations = " << join(p.sector_populations) << "\n"
      << "w0 = " << p.w0 << "\n"
      << "m = " << p.m << "\n"
      << "bi_slots = " << p.bi_slots << "\n"
      << "cbap_slots = " << p.cbap_slots << "\n"
      << "cbap_split = " << join(p.cbap_split) << "\n"
      << "slot_time = " << fmt_double(p.slot_time) << "\n"
      << "sifs = " << fmt_double(p.sifs) << "\n"
      << "difs = " << fmt_double(p.difs) << "\n"
      << "rifs = " << fmt_double(p.rifs) << "\n"
      << "rts_bytes = " << p.rts_bytes << "\n"
      << "cts_bytes = " << p.cts_bytes << "\n"
      << "ack_bytes = " << p.ack_bytes << "\n"
      << "msdu_bytes = " << p.msdu_bytes << "\n"
      << "control_rate = " << fmt_double(p.control_rate) << "\n"
      << "data_rate = " << fmt_double(p.data_rate) << "\n"
      << "phy_overhead = " << fmt_double(p.phy_overhead) << "\n"
      << "strict_timing = " << (p.strict_timing ? "true" : "false") << "\n"
      << "window_convention = "
      << (p.window_convention == WindowConvention::kDoubling ? "doubling" : "doubling_minus_one")
      << "\n"
      << "drop_policy = "
      << (p.drop_policy == DropPolicy::kImmediateAttempt ? "immediate_attempt" : "fresh_backoff")
      << "\n";
  return out.str();
}

}  // namespace cbap
