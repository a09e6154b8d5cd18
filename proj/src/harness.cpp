#include "cbap/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "cbap/chain_oracle.hpp"
#include "cbap/error.hpp"
#include "cbap/metrics.hpp"
#include "cbap/simulator.hpp"

namespace cbap {

const char* to_string(RunMode mode) { return mode == RunMode::kAnalytic ? "analytic" : "sim"; }

namespace {

std::string num(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorKind::kConfig, "malformed number `" + s + "` in CSV");
  return x;
}

template <typename Int>
Int to_int(const std::string& s) {
  Int x = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorKind::kConfig, "malformed integer `" + s + "` in CSV");
  return x;
}

ResultRow base_row(const ModelParams& params, RunMode mode) {
  ResultRow row;
  row.mode = mode;
  row.config_hash = config_hash(params);
  row.n = params.n;
  row.q = params.q;
  row.w0 = params.w0;
  row.m = params.m;
  row.cbap_fraction = params.cbap_fraction();
  return row;
}

void fill_from_report(ResultRow& row, const PerformanceReport& report) {
  for (const auto& s : report.sectors) row.u_sectors.push_back(s.utilization);
  row.u = report.utilization;
  row.mean_delay_s = report.mean_delay;
  row.drop_prob = report.drop_probability;
}

// Runs `count` independent tasks on up to `jobs` threads. Each task writes only
// its own output slot.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string config_hash(const ModelParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : describe_params(params)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

ResultRow analytic_row(const ModelParams& params, const SolverSettings& solver) {
  auto row = base_row(params, RunMode::kAnalytic);
  fill_from_report(row, analyze(params, solver));
  return row;
}

ResultRow sim_row(const ModelParams& params, std::uint64_t seed, std::int64_t num_bi) {
  auto row = base_row(params, RunMode::kSim);
  row.seed = seed;
  row.num_bi = num_bi;
  const auto stats = run_simulation(params, derive_timings(params), seed, num_bi);
  fill_from_report(row, empirical_report(stats, params));
  return row;
}

void SweepSpec::validate() const {
  static const std::vector<std::string> sweepable = {"n", "w0", "q", "cbap_fraction"};
  if (std::find(sweepable.begin(), sweepable.end(), parameter) == sweepable.end())
    throw Error(ErrorKind::kConfig, "cannot sweep `" + parameter + "`; use n, w0, q or cbap_fraction");
  if (values.empty()) throw Error(ErrorKind::kConfig, "sweep needs at least one value");
  if (modes.empty()) throw Error(ErrorKind::kConfig, "sweep needs at least one mode");
  const bool wants_sim = std::find(modes.begin(), modes.end(), RunMode::kSim) != modes.end();
  if (wants_sim && seeds.empty()) throw Error(ErrorKind::kConfig, "simulation needs seeds");
  if (wants_sim && num_bi < 1) throw Error(ErrorKind::kConfig, "num_bi must be >= 1");
}

std::vector<ResultRow> run_sweep(const SweepSpec& spec) {
  spec.validate();

  struct Task {
    std::size_t value_index;
    ModelParams params;
    RunMode mode;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t v = 0; v < spec.values.size(); ++v) {
    auto settings = spec.base;
    settings[spec.parameter] = spec.values[v];
    const auto params = resolve_params(settings);  // malformed values abort the sweep
    for (auto mode : spec.modes) {
      if (mode == RunMode::kAnalytic) {
        tasks.push_back({v, params, mode, 0});
      } else {
        for (auto seed : spec.seeds) tasks.push_back({v, params, mode, seed});
      }
    }
  }

  std::vector<ResultRow> rows(tasks.size());
  parallel_for(tasks.size(), spec.jobs, [&](std::size_t i) {
    const auto& task = tasks[i];
    ResultRow row;
    try {
      row = task.mode == RunMode::kAnalytic ? analytic_row(task.params)
                                            : sim_row(task.params, task.seed, spec.num_bi);
    } catch (const Error& e) {
      if (!e.is_infeasible()) throw;
      row = base_row(task.params, task.mode);
      if (task.mode == RunMode::kSim) {
        row.seed = task.seed;
        row.num_bi = spec.num_bi;
      }
      row.status = to_string(e.kind());
    }
    row.param = spec.parameter;
    row.value = spec.values[task.value_index];
    rows[i] = std::move(row);
  });

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = std::stod(rows[a].value);
    const double vb = std::stod(rows[b].value);
    if (va != vb) return va < vb;
    if (rows[a].mode != rows[b].mode) return rows[a].mode < rows[b].mode;
    return rows[a].seed.value_or(0) < rows[b].seed.value_or(0);
  });
  std::vector<ResultRow> sorted;
  sorted.reserve(rows.size());
  for (auto i : order) sorted.push_back(std::move(rows[i]));
  return sorted;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "mode", "param", "value", "config_hash", "seed", "n", "q", "w0", "m", "cbap_fraction",
      "u_sectors", "u", "mean_delay_s", "drop_prob", "num_bi", "status"};
  return cols;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows,
               const std::string& comment_header) {
  std::istringstream comments(comment_header);
  for (std::string line; std::getline(comments, line);) out << "# " << line << "\n";
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& r : rows) {
    std::string sectors;
    for (std::size_t k = 0; k < r.u_sectors.size(); ++k) sectors += (k ? ";" : "") + num(r.u_sectors[k]);
    out << to_string(r.mode) << "," << r.param << "," << r.value << "," << r.config_hash << ","
        << (r.seed ? std::to_string(*r.seed) : "") << "," << r.n << "," << r.q << "," << r.w0
        << "," << r.m << "," << num(r.cbap_fraction) << "," << sectors << "," << num(r.u) << ","
        << (r.mean_delay_s ? num(*r.mean_delay_s) : "") << "," << num(r.drop_prob) << ","
        << (r.num_bi ? std::to_string(*r.num_bi) : "") << "," << r.status << "\n";
  }
}

std::vector<ResultRow> read_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  bool header_seen = false;
  const auto& cols = csv_columns();
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    auto fields = split(line, ',');
    if (!header_seen) {
      if (fields != cols) throw Error(ErrorKind::kConfig, "CSV header does not match the result schema");
      header_seen = true;
      continue;
    }
    if (fields.size() != cols.size())
      throw Error(ErrorKind::kConfig, "CSV row has " + std::to_string(fields.size()) + " fields");
    ResultRow r;
    if (fields[0] == "analytic") r.mode = RunMode::kAnalytic;
    else if (fields[0] == "sim") r.mode = RunMode::kSim;
    else throw Error(ErrorKind::kConfig, "unknown mode `" + fields[0] + "`");
    r.param = fields[1];
    r.value = fields[2];
    r.config_hash = fields[3];
    if (!fields[4].empty()) r.seed = to_int<std::uint64_t>(fields[4]);
    r.n = to_int<int>(fields[5]);
    r.q = to_int<int>(fields[6]);
    r.w0 = to_int<int>(fields[7]);
    r.m = to_int<int>(fields[8]);
    r.cbap_fraction = to_double(fields[9]);
    if (!fields[10].empty())
      for (const auto& u : split(fields[10], ';')) r.u_sectors.push_back(to_double(u));
    r.u = to_double(fields[11]);
    if (!fields[12].empty()) r.mean_delay_s = to_double(fields[12]);
    r.drop_prob = to_double(fields[13]);
    if (!fields[14].empty()) r.num_bi = to_int<std::int64_t>(fields[14]);
    r.status = fields[15];
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ComparisonRow> compare_rows(const std::vector<ResultRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, const ResultRow*> analytic;
  std::map<std::string, std::vector<const ResultRow*>> sims;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    if (r.mode == RunMode::kAnalytic) {
      if (analytic.emplace(r.config_hash, &r).second) order.push_back(r.config_hash);
    } else {
      sims[r.config_hash].push_back(&r);
    }
  }
  std::vector<ComparisonRow> out;
  for (const auto& hash : order) {
    auto it = sims.find(hash);
    if (it == sims.end()) continue;
    const auto& a = *analytic.at(hash);
    const auto& runs = it->second;
    ComparisonRow c;
    c.param = a.param;
    c.value = a.value;
    c.config_hash = hash;
    c.u_analytic = a.u;
    c.seeds = static_cast<int>(runs.size());
    double sum = 0.0, sq = 0.0, dsum = 0.0;
    int dcount = 0;
    for (const auto* r : runs) {
      sum += r->u;
      sq += r->u * r->u;
      if (r->mean_delay_s) {
        dsum += *r->mean_delay_s;
        ++dcount;
      }
    }
    const double k = static_cast<double>(runs.size());
    c.u_sim = sum / k;
    if (runs.size() > 1) c.u_sim_se = std::sqrt(std::max(0.0, (sq - k * c.u_sim * c.u_sim) / (k - 1)) / k);
    c.u_rel_err = c.u_analytic > 0.0 ? std::abs(c.u_sim - c.u_analytic) / c.u_analytic : 0.0;
    c.delay_analytic = a.mean_delay_s;
    if (dcount > 0) c.delay_sim = dsum / dcount;
    if (c.delay_analytic && c.delay_sim)
      c.delay_rel_err = std::abs(*c.delay_sim - *c.delay_analytic) / *c.delay_analytic;
    out.push_back(std::move(c));
  }
  return out;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "param,value,config_hash,u_analytic,u_sim,u_sim_se,u_rel_err,delay_analytic_s,"
         "delay_sim_s,delay_rel_err,seeds\n";
  auto opt = [](const std::optional<double>& x) { return x ? num(*x) : std::string(); };
  for (const auto& c : rows) {
    out << c.param << "," << c.value << "," << c.config_hash << "," << num(c.u_analytic) << ","
        << num(c.u_sim) << "," << num(c.u_sim_se) << "," << num(c.u_rel_err) << ","
        << opt(c.delay_analytic) << "," << opt(c.delay_sim) << "," << opt(c.delay_rel_err) << ","
        << c.seeds << "\n";
  }
}

// ---------------------------------------------------------------------------

std::vector<ValidationRow> validate_grid(const ValidationGrid& grid) {
  std::vector<ValidationRow> rows;
  rows.reserve(grid.size());
  for (int w0 : grid.w0s)
    for (int m : grid.ms)
      for (double p : grid.ps)
        for (double p_h : grid.p_hs)
          for (double ratio : grid.p_h_ratios)
            for (double p_f : grid.p_fs) {
              SectorModel sector;
              sector.p_h = p_h;
              sector.p_h_prime = ratio * p_h;
              sector.p_f = p_f;
              sector.p_r = 1.0 - p_f;
              ValidationRow row{w0, m, p, p_h, sector.p_h_prime, p_f};
              std::ostringstream where;
              where << "grid point w0=" << w0 << " m=" << m << " p=" << p << " p_H=" << p_h
                    << " p'_H=" << sector.p_h_prime << " p_f=" << p_f << ": ";
              try {
                const auto chain = build_chain(p, sector, w0, m, grid.options);
                const auto oracle = stationary_distribution(chain);
                const auto closed = steady_state_at(p, p, sector, w0, m, grid.options);
                row.b000_closed = closed.at(0, 0, 0);
                row.b000_oracle = oracle.at(0, 0, 0);
                row.b000_rel_err = std::abs(row.b000_closed - row.b000_oracle) / row.b000_oracle;
                row.tau_closed = tau_of(p, row.b000_closed, m);
                row.tau_oracle = oracle.head_of_line_sum();
                row.tau_rel_err = std::abs(row.tau_closed - row.tau_oracle) / row.tau_oracle;
                for (int i = 0; i <= m; ++i)
                  for (int j = 0; j < closed.width(i); ++j)
                    for (int h : {0, -1})
                      row.max_entry_abs_diff = std::max(
                          row.max_entry_abs_diff, std::abs(closed.at(i, j, h) - oracle.at(i, j, h)));
              } catch (const Error& e) {
                throw Error(e.kind(), where.str() + e.what());
              }
              rows.push_back(row);
            }
  return rows;
}

double max_relative_error(const std::vector<ValidationRow>& rows) {
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max({worst, r.b000_rel_err, r.tau_rel_err});
  return worst;
}

void write_validation_report(std::ostream& out, const std::vector<ValidationRow>& rows) {
  out << std::left << std::setw(4) << "w0" << std::setw(3) << "m" << std::setw(6) << "p"
      << std::setw(8) << "p_H" << std::setw(8) << "p'_H" << std::setw(6) << "p_f"
      << std::setw(20) << "b000_closed" << std::setw(20) << "b000_oracle" << std::setw(12)
      << "rel_err" << std::setw(12) << "tau_rel_err" << "max_abs_entry_diff\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(4) << r.w0 << std::setw(3) << r.m << std::setw(6) << r.p
        << std::setw(8) << r.p_h << std::setw(8) << r.p_h_prime << std::setw(6) << r.p_f
        << std::setprecision(15) << std::setw(20) << r.b000_closed << std::setw(20)
        << r.b000_oracle << std::setprecision(3) << std::scientific << std::setw(12)
        << r.b000_rel_err << std::setw(12) << r.tau_rel_err << r.max_entry_abs_diff
        << std::defaultfloat << std::setprecision(6) << "\n";
  }
}

}  // namespace cbap
