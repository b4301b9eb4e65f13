#pragma once

// Experiment runners behind the fiberlab command line. Every command returns
// an exit code: 0 success, 1 an asserted inequality failed (the report is
// still written), 2 configuration or resource error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fiberlab/complexity.hpp"
#include "fiberlab/config.hpp"
#include "fiberlab/fiber.hpp"

namespace fiberlab {

enum ExitCode : int { exit_ok = 0, exit_assertion = 1, exit_config = 2 };

inline constexpr int report_schema_version = 1;

struct CommandOptions {
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::string> preset;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> n;
  std::vector<std::size_t> k;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<double> tolerance;
};

// A cell value: number, integer, text or missing.
struct Cell {
  enum class Kind { real, integer, text, missing } kind = Kind::missing;
  double real = 0.0;
  std::int64_t integer = 0;
  std::string text;

  static Cell of(double x) { return std::isnan(x) ? Cell{} : Cell{Kind::real, x, 0, {}}; }
  static Cell of(std::optional<double> x) { return x ? of(*x) : Cell{}; }
  static Cell count(std::uint64_t x) { return {Kind::integer, 0.0, static_cast<std::int64_t>(x), {}}; }
  static Cell flag(bool b) { return count(b ? 1 : 0); }
  static Cell str(std::string s) { return {Kind::text, 0.0, 0, std::move(s)}; }

  std::string csv() const {
    switch (kind) {
      case Kind::real: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9f", real);
        return buf;
      }
      case Kind::integer: return std::to_string(integer);
      case Kind::text: return text;
      case Kind::missing: return "";
    }
    return "";
  }

  nlohmann::json json() const {
    switch (kind) {
      case Kind::real: return real;
      case Kind::integer: return integer;
      case Kind::text: return text;
      case Kind::missing: return nullptr;
    }
    return nullptr;
  }
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline void write_csv(const Table& t, std::ostream& os) {
  os << "# fiberlab " << t.name << " report v" << report_schema_version << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i].csv();
    os << '\n';
  }
}

inline nlohmann::json table_json(const Table& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& c : row) r.push_back(c.json());
    rows.push_back(std::move(r));
  }
  return {{"schema", "fiberlab-report/" + std::to_string(report_schema_version)},
          {"report", t.name},
          {"columns", t.columns},
          {"rows", std::move(rows)}};
}

// Runs cells [0, count) with at most FIBERLAB_MAX_CELLS workers. Each cell
// writes only its own result slot.
inline void run_cells(std::size_t count, const std::function<void(std::size_t)>& cell) {
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FIBERLAB_MAX_CELLS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && v > 0) workers = v;
  }
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) cell(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < count; i = next++) cell(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

class ReportSink {
public:
  ReportSink(const ExperimentConfig& cfg, std::ostream& out) : cfg_(cfg), out_(out) {}

  void table(const Table& t) {
    const bool json = cfg_.format == "json";
    if (cfg_.output_path.empty()) {
      if (json)
        out_ << table_json(t).dump(2) << '\n';
      else
        write_csv(t, out_);
      return;
    }
    std::ofstream f(path(t.name + (json ? ".json" : ".csv")));
    if (json)
      f << table_json(t).dump(2) << '\n';
    else
      write_csv(t, f);
    if (!f) throw config_error("cannot write report for " + t.name);
  }

  void summary(const std::string& command, const nlohmann::json& s) {
    if (cfg_.output_path.empty()) return;
    std::ofstream f(path(command + "-summary.json"));
    f << s.dump(2) << '\n';
    if (!f) throw config_error("cannot write summary for " + command);
  }

private:
  std::string path(const std::string& file) const {
    std::filesystem::create_directories(cfg_.output_path);
    return (std::filesystem::path(cfg_.output_path) / file).string();
  }

  const ExperimentConfig& cfg_;
  std::ostream& out_;
};

struct GridCell {
  std::uint64_t seed;
  std::size_t k;
  std::size_t n;
};

inline std::vector<GridCell> experiment_grid(const ExperimentConfig& c) {
  std::vector<GridCell> grid;
  for (auto seed : c.seeds)
    for (auto k : c.block_lengths)
      for (auto n : c.horizons) grid.push_back({seed, k, n});
  return grid;
}

inline nlohmann::json system_json(const ExperimentConfig& c) {
  return {{"preset", c.preset}, {"driving", driving_to_json(c.driving)}, {"fiber", fiber_to_json(c.fiber)}};
}

// ---------------------------------------------------------------------------

inline int cmd_verify_brudno(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  for (std::size_t k : c.block_lengths) check_block_cap(c, k);

  std::vector<BlockCodebookFamily> families;
  for (std::size_t k : c.block_lengths) families.push_back(build_codebooks(c.fiber, c.driving, k));

  const auto grid = experiment_grid(c);
  std::vector<EstimatorReport> reports(grid.size());
  run_cells(grid.size(), [&](std::size_t i) {
    const auto& g = grid[i];
    const auto& fam = families[static_cast<std::size_t>(
        std::find(c.block_lengths.begin(), c.block_lengths.end(), g.k) - c.block_lengths.begin())];
    const RunSeeds rs = run_seeds(g.seed);
    const auto alpha = sample_trajectory(c.driving, g.n, rs.driving);
    reports[i] = conditional_rate(emit_name(c.fiber, alpha.letters, rs.fiber), fam);
  });

  Table t{"verify-brudno",
          {"n", "k", "code_rate", "H_hat_over_k", "exact_h_k", "residual", "seed", "J_n_over_n", "coding_bound",
           "coding_bound_ok", "no_undershoot_ok"},
          {}};
  double max_code_gap = 0.0;
  double max_estimate_gap = 0.0;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& r = reports[i];
    t.rows.push_back({Cell::count(r.n), Cell::count(r.k), Cell::of(r.code_rate), Cell::of(r.cross_entropy_rate),
                      Cell::of(r.exact_rate), Cell::of(r.code_gap()), Cell::count(grid[i].seed),
                      Cell::of(r.information_rate), Cell::of(r.coding_bound), Cell::flag(r.coding_bound_holds),
                      Cell::flag(r.no_undershoot || !r.no_undershoot_asserted)});
    if (r.n > 0) max_code_gap = std::max(max_code_gap, std::abs(r.code_gap()));
    if (r.cross_entropy_rate) max_estimate_gap = std::max(max_estimate_gap, std::abs(r.estimate_gap()));
    if (!r.checks_pass()) ++failures;
    if (r.n > 0 && r.n < undershoot_assert_horizon && !r.no_undershoot)
      err << "note: undershoot below the asserted horizon at n=" << r.n << " k=" << r.k << '\n';
  }
  bool length_bound_ok = true;
  for (const auto& fam : families)
    if (fam.max_length_excess() > 1.0 + 1e-9) length_bound_ok = false;
  if (!length_bound_ok) ++failures;

  ReportSink sink(c, out);
  sink.table(t);
  sink.summary("verify-brudno", {{"system", system_json(c)},
                                 {"cells", grid.size()},
                                 {"max_code_gap", max_code_gap},
                                 {"max_estimate_gap", max_estimate_gap},
                                 {"length_bound_ok", length_bound_ok},
                                 {"failures", failures},
                                 {"passed", failures == 0}});
  err << "verify-brudno: " << grid.size() << " cells, max |code_rate - h_k| = " << max_code_gap
      << ", max |H_hat/k - h_k| = " << max_estimate_gap << ", failures = " << failures << '\n';
  return failures == 0 ? exit_ok : exit_assertion;
}

inline double default_tolerance(const ExperimentConfig& c) {
  return c.preset == "free-monoid-uniform" ? 0.05 : 0.1;
}

inline int cmd_verify_ar(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const double tol = c.tolerance.value_or(default_tolerance(c));
  const auto grid = experiment_grid(c);
  std::vector<ArReport> reports(grid.size());
  run_cells(grid.size(), [&](std::size_t i) {
    reports[i] = ar_decomposition_check(c.driving, c.fiber, grid[i].n, grid[i].k, grid[i].seed);
  });

  std::optional<double> h_driving;
  if (is_stationary(c.driving)) h_driving = entropy_rate(c.driving);

  Table t{"verify-ar", {"n", "k", "joint_rate", "plain_rate", "conditional_rate", "residual", "seed", "h_driving"}, {}};
  double max_residual = 0.0;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& r = reports[i];
    t.rows.push_back({Cell::count(r.n), Cell::count(r.k), Cell::of(r.joint_rate), Cell::of(r.plain_rate),
                      Cell::of(r.conditional_rate), Cell::of(r.residual), Cell::count(r.seed), Cell::of(h_driving)});
    max_residual = std::max(max_residual, std::abs(r.residual));
    if (!(std::abs(r.residual) <= tol)) ++failures;
  }

  ReportSink sink(c, out);
  sink.table(t);
  sink.summary("verify-ar", {{"system", system_json(c)},
                             {"cells", grid.size()},
                             {"tolerance", tol},
                             {"max_abs_residual", max_residual},
                             {"failures", failures},
                             {"passed", failures == 0}});
  err << "verify-ar: " << grid.size() << " cells, max |residual| = " << max_residual << " (tolerance " << tol
      << "), failures = " << failures << '\n';
  return failures == 0 ? exit_ok : exit_assertion;
}

inline int cmd_entropy(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
  const std::size_t kmax = *std::max_element(c.block_lengths.begin(), c.block_lengths.end());
  if (!bounded_power(c.driving.size(), kmax, enumeration_cap))
    throw config_error("block length " + std::to_string(kmax) + " exceeds the |Theta|^k <= 2^24 cap");
  Table t{"entropy", {"k", "H_k", "h_k"}, {}};
  for (std::size_t k = 1; k <= kmax; ++k) {
    const auto e = exact_averaged_entropy(c.fiber, c.driving, k);
    t.rows.push_back({Cell::count(k), Cell::of(e.total_bits), Cell::of(e.per_symbol)});
  }
  ReportSink(c, out).table(t);
  return exit_ok;
}

inline int cmd_range(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
  const auto curve = range_ratio_curve(c.fiber.action(), c.driving, c.max_horizon_requested(), c.seeds);
  Table t{"range", {"n", "mean_range_ratio", "seeds"}, {}};
  for (const auto& p : curve) t.rows.push_back({Cell::count(p.n), Cell::of(p.mean_ratio), Cell::count(c.seeds.size())});
  ReportSink(c, out).table(t);
  return exit_ok;
}

inline int cmd_simulate(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  if (!is_stationary(c.driving)) err << "warning: driving spec is not stationary\n";
  const std::size_t n = c.max_horizon_requested();
  Table samples{"simulate", {"seed", "i", "alpha", "omega"}, {}};
  for (auto seed : c.seeds) {
    const RunSeeds rs = run_seeds(seed);
    const auto alpha = sample_trajectory(c.driving, n, rs.driving);
    const auto name = emit_name(c.fiber, alpha.letters, rs.fiber);
    for (std::size_t i = 0; i < n; ++i)
      samples.rows.push_back({Cell::count(seed), Cell::count(i), Cell::str(c.driving.alphabet().symbol(name.driving[i])),
                              Cell::str(c.fiber.alphabet().symbol(name.letters[i]))});
  }
  Table smb{"simulate-smb", {"n", "J_n", "J_n_over_n", "exact_h_n", "seed"}, {}};
  for (const auto& r : smb_convergence(c.fiber, c.driving, n, c.seeds))
    smb.rows.push_back({Cell::count(r.n), Cell::of(r.information), Cell::of(r.information_rate), Cell::of(r.exact_h),
                        Cell::count(r.seed)});
  ReportSink sink(c, out);
  sink.table(samples);
  if (!c.output_path.empty()) sink.table(smb);
  return exit_ok;
}

inline ExperimentConfig resolve_config(const CommandOptions& opt) {
  ExperimentConfig c = opt.config_path ? load_config(*opt.config_path)
                       : opt.preset     ? config_from_preset(*opt.preset)
                                        : throw config_error("either --config or --preset is required");
  if (opt.config_path && opt.preset) {
    auto p = config_from_preset(*opt.preset);
    c.preset = p.preset;
    c.driving = std::move(p.driving);
    c.fiber = std::move(p.fiber);
  }
  if (!opt.seeds.empty()) c.seeds = opt.seeds;
  if (opt.n) c.horizons = {*opt.n};
  if (!opt.k.empty()) c.block_lengths = opt.k;
  if (opt.out) c.output_path = *opt.out;
  if (opt.format) c.format = *opt.format;
  if (opt.tolerance) c.tolerance = *opt.tolerance;
  validate(c);
  return c;
}

inline int run_command(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const ExperimentConfig c = resolve_config(opt);
    if (opt.command == "verify-brudno") return cmd_verify_brudno(c, out, err);
    if (opt.command == "verify-ar") return cmd_verify_ar(c, out, err);
    if (opt.command == "entropy") return cmd_entropy(c, out, err);
    if (opt.command == "range") return cmd_range(c, out, err);
    if (opt.command == "simulate") return cmd_simulate(c, out, err);
    err << "error: unknown command '" << opt.command << "'\n";
    return exit_config;
  } catch (const config_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const resource_limit& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
}

}  // namespace fiberlab
