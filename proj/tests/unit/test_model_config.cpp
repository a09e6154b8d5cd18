#include <doctest.h>

#include <cmath>

#include "cbap/error.hpp"
#include "cbap/model_config.hpp"

using namespace cbap;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::kInternalConsistency;
}

}  // namespace

TEST_CASE("frame airtime is size over rate plus overhead") {
  CHECK(frame_airtime(7995, 2e9, 0.0) == doctest::Approx(31.98e-6).epsilon(1e-12));
  CHECK(frame_airtime(20, 27.5e6, 0.0) == doctest::Approx(160.0 / 27.5e6).epsilon(1e-12));
  CHECK(frame_airtime(20, 27.5e6, 0.0) == doctest::Approx(5.818e-6).epsilon(1e-4));
  CHECK(frame_airtime(20, 27.5e6, 1e-6) == doctest::Approx(160.0 / 27.5e6 + 1e-6));
}

TEST_CASE("default timings") {
  const ModelParams p;
  const auto t = derive_timings(p);
  const double rts = 160.0 / 27.5e6, cts = 208.0 / 27.5e6, ack = 112.0 / 27.5e6;
  const double data = 7995.0 * 8 / 2e9;
  CHECK(t.t_suc == doctest::Approx(rts + 2 * 2.5e-6 + cts + 13.5e-6 + data + ack).epsilon(1e-12));
  CHECK(t.t_col == doctest::Approx(t.t_rts + 25e-6).epsilon(1e-12));
  CHECK(t.e_payload == doctest::Approx(data));
  CHECK(t.n_frame_slots == 14);  // 67.93 us / 5 us
  CHECK(t.n_collision_slots == 7);  // 30.82 us / 5 us
  CHECK(t.t_suc > t.t_col);
}

TEST_CASE("relaxed timing adds a SIFS to the success time") {
  ModelParams p;
  const auto strict = derive_timings(p);
  p.strict_timing = false;
  CHECK(derive_timings(p).t_suc == doctest::Approx(strict.t_suc + p.sifs));
  CHECK(derive_timings(p).t_col == strict.t_col);
}

TEST_CASE("sector model constants") {
  ModelParams p;
  const auto t = derive_timings(p);
  auto s = derive_sector_models(p, t);
  REQUIRE(s.size() == 1);
  CHECK(s[0].p_h == doctest::Approx(1.25e-4));
  CHECK(s[0].p_h_prime == doctest::Approx(14 * 1.25e-4));
  CHECK(s[0].p_h_prime / s[0].p_h == doctest::Approx(t.n_frame_slots).epsilon(1e-14));
  CHECK(s[0].p_r == doctest::Approx(0.4));
  CHECK(s[0].p_f == doctest::Approx(0.6));

  p.cbap_slots = p.bi_slots;
  p.cbap_split = {p.bi_slots};
  s = derive_sector_models(p, t);
  CHECK(s[0].p_r == 1.0);
  CHECK(s[0].p_f == 0.0);
}

TEST_CASE("halving a sector's CBAP share doubles p_H") {
  ModelParams p;
  p.q = 2;
  p.sector_populations = {5, 5};
  p.cbap_split = {4000, 4000};
  const auto t = derive_timings(p);
  const auto halved = derive_sector_models(p, t);
  ModelParams one;
  const auto full = derive_sector_models(one, derive_timings(one));
  CHECK(halved[0].p_h == 2 * full[0].p_h);
  CHECK(halved[1].p_h_prime == 2 * full[0].p_h_prime);
}

TEST_CASE("CBAP share shorter than a frame exchange is infeasible") {
  ModelParams p;
  p.cbap_slots = 10;
  p.cbap_split = {10};
  CHECK(kind_of([&] { derive_sector_models(p, derive_timings(p)); }) == ErrorKind::kInfeasibleCbap);
}

TEST_CASE("parameter invariants") {
  auto broken = [](auto mutate) {
    ModelParams p;
    mutate(p);
    return kind_of([&] { p.validate(); });
  };
  CHECK(broken([](ModelParams& p) { p.w0 = 1; }) == ErrorKind::kInvalidParameter);
  CHECK(broken([](ModelParams& p) { p.m = -1; }) == ErrorKind::kInvalidParameter);
  CHECK(broken([](ModelParams& p) { p.sector_populations = {9}; }) == ErrorKind::kInvalidParameter);
  CHECK(broken([](ModelParams& p) { p.cbap_split = {7000}; }) == ErrorKind::kInvalidParameter);
  CHECK(broken([](ModelParams& p) {
          p.cbap_slots = 30000;
          p.cbap_split = {30000};
        }) == ErrorKind::kInvalidParameter);
  CHECK(broken([](ModelParams& p) { p.slot_time = 0; }) == ErrorKind::kInvalidParameter);
  CHECK(broken([](ModelParams& p) {
          p.q = 2;
          p.sector_populations = {10, 0};
          p.cbap_split = {4000, 4000};
        }) == ErrorKind::kInvalidParameter);
  ModelParams ok;
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("window conventions") {
  CHECK(window_size(7, 0, WindowConvention::kDoubling) == 7);
  CHECK(window_size(7, 3, WindowConvention::kDoubling) == 56);
  CHECK(window_size(8, 2, WindowConvention::kDoublingMinusOne) == 31);
}

TEST_CASE("populations and CBAP split") {
  CHECK(round_robin_populations(10, 4) == std::vector<int>{3, 3, 2, 2});
  CHECK(split_cbap(8001, {3, 3, 2, 2}, CbapSplitRule::kEqual) ==
        std::vector<std::int64_t>{2001, 2000, 2000, 2000});
  CHECK(split_cbap(8000, {6, 2}, CbapSplitRule::kProportional) ==
        std::vector<std::int64_t>{6000, 2000});
}

TEST_CASE("settings text") {
  const auto s = parse_settings("# comment\nn = 20\n  w0=15   # trailing\n\n");
  CHECK(s.at("n") == "20");
  CHECK(s.at("w0") == "15");
  CHECK(kind_of([] { parse_settings("nn = 3\n"); }) == ErrorKind::kConfig);
  CHECK(kind_of([] { parse_settings("n = 3\nn = 4\n"); }) == ErrorKind::kConfig);
  CHECK(kind_of([] { parse_settings("n 3\n"); }) == ErrorKind::kConfig);
  CHECK(kind_of([] { resolve_params({{"n", "ten"}}); }) == ErrorKind::kConfig);
}

TEST_CASE("settings resolution and layering") {
  auto p = resolve_params({});
  CHECK(p.n == 10);
  CHECK(p.bi_slots == 20000);
  CHECK(p.cbap_slots == 8000);

  p = resolve_params(merge_settings({{"n", "12"}, {"q", "3"}}, {{"n", "40"}, {"cbap_fraction", "1"}}));
  CHECK(p.n == 40);
  CHECK(p.sector_populations == std::vector<int>{14, 13, 13});
  CHECK(p.cbap_slots == 20000);
  CHECK(p.cbap_split.size() == 3);

  p = resolve_params({{"bi_ms", "50"}, {"window_convention", "doubling_minus_one"}});
  CHECK(p.bi_slots == 10000);
  CHECK(p.cbap_slots == 4000);
  CHECK(p.window_convention == WindowConvention::kDoublingMinusOne);
}

TEST_CASE("canonical dump resolves back to the same parameters") {
  Settings settings;
  settings["n"] = "23";
  settings["q"] = "2";
  settings["w0"] = "15";
  const auto p = resolve_params(settings);
  const auto dump = describe_params(p);
  CHECK(describe_params(resolve_params(parse_settings(dump))) == dump);
}
