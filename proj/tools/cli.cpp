#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "repeaterlab/params.hpp"
#include "repeaterlab/rates.hpp"
#include "repeaterlab/sim.hpp"
#include "verify.hpp"

namespace repeaterlab::cli {
namespace {

constexpr std::uint64_t kFallbackSeed = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Shared {
  std::string config;
  std::string format = "table";
  bool verbose = false;
  std::map<std::string, double> overrides;
};

std::string flag_name(std::string_view key) {
  std::string name(key);
  std::replace(name.begin(), name.end(), '_', '-');
  return "--" + name;
}

std::string key_name(std::string_view text) {
  std::string key(text);
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

void add_shared(CLI::App* sub, Shared& shared) {
  sub->add_option("--config", shared.config, "JSON parameter file");
  sub->add_option("--format", shared.format, "Output format")
      ->check(CLI::IsMember({"table", "csv", "jsonl"}));
  sub->add_flag("--verbose", shared.verbose, "Diagnostics on the error stream");
}

void add_overrides(CLI::App* sub, Shared& shared) {
  for (std::string_view key : parameter_keys()) {
    const std::string k(key);
    sub->add_option_function<double>(
           flag_name(key), [&shared, k](const double& v) { shared.overrides[k] = v; },
           "Override " + k)
        ->group("Parameter overrides");
  }
}

ProtocolParams resolve_params(const Shared& shared) {
  ProtocolParams params =
      shared.config.empty() ? paper_defaults() : load_config_file(shared.config);
  for (const auto& [key, value] : shared.overrides) set_parameter(params, key, value);
  const ValidationResult check = validate(params);
  if (!check.ok()) {
    throw ConfigError(check.violations.front().field,
                      "invalid parameters: " + check.summary());
  }
  return params;
}

void log_params(const Shared& shared, const ProtocolParams& params, std::ostream& err) {
  if (!shared.verbose) return;
  err << "parameters:";
  for (std::string_view key : parameter_keys()) {
    err << ' ' << key << '=' << format_number(get_parameter(params, key));
  }
  err << '\n';
}

Record report_fields(const RateReport& r) {
  return {{"eta_t", r.eta_t}, {"p_l", r.p_l},     {"p_0", r.p_0},
          {"p_swap", r.p_swap}, {"t_l", r.t_l},   {"t_0", r.t_0},
          {"t_total", r.t_total}, {"delta_f", r.delta_f}};
}

// Like rates::t_total but reports an infinite time instead of throwing when
// a stage cannot succeed.
RateReport report_or_infinite(const ProtocolParams& params) {
  try {
    return rates::t_total(params);
  } catch (const std::domain_error&) {
    RateReport r;
    const double inf = std::numeric_limits<double>::infinity();
    r.eta_t = rates::fiber_transmission(params.l0_km(), params.l_att_km);
    r.p_l = rates::p_local(params);
    r.p_0 = rates::p_link(params);
    r.p_swap = rates::p_swap(params);
    r.t_l = r.p_l > 0.0 ? rates::t_local(params) : inf;
    r.t_0 = params.l0_km() / params.c_km_s + r.t_l;
    r.t_total = inf;
    r.delta_f = rates::delta_f(params.n, params.p_d);
    return r;
  }
}

int cmd_rates(const Shared& shared, std::ostream& out, std::ostream& err) {
  const ProtocolParams params = resolve_params(shared);
  log_params(shared, params, err);
  const RateReport r = rates::t_total(params);
  Record row{{"n", std::int64_t{params.n}}, {"l0_km", params.l0_km()}};
  for (Field& f : report_fields(r)) row.push_back(std::move(f));
  emit(out, {row}, parse_format(shared.format));
  return kExitOk;
}

struct SimulateArgs {
  std::int64_t trials = 1000;
  std::optional<std::uint64_t> seed;
  std::string swap_comm = "off";
  unsigned threads = 0;
};

std::uint64_t default_seed() {
  const char* env = std::getenv("REPEATERLAB_SEED");
  if (env == nullptr || *env == '\0') return kFallbackSeed;
  std::uint64_t seed = 0;
  const std::string_view text(env);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw UsageError("REPEATERLAB_SEED must be an unsigned 64-bit integer");
  }
  return seed;
}

int cmd_simulate(const Shared& shared, const SimulateArgs& args, std::ostream& out,
                 std::ostream& err) {
  if (args.trials < 1) throw UsageError("--trials must be at least 1");
  const ProtocolParams params = resolve_params(shared);
  log_params(shared, params, err);
  const std::uint64_t seed = args.seed ? *args.seed : default_seed();
  sim::SimPolicy policy;
  policy.swap_comm = args.swap_comm == "on" ? sim::SwapComm::on : sim::SwapComm::off;

  const sim::StageModel model = sim::StageModel::from_params(params);
  const sim::Comparison c = sim::compare_analytic(
      model, policy, static_cast<std::size_t>(args.trials), seed, {args.threads});
  const sim::Estimate& e = c.mc;
  Record row{{"n", std::int64_t{params.n}},
             {"trials", static_cast<std::int64_t>(e.trials)},
             {"seed", std::to_string(e.seed)},
             {"swap_comm", args.swap_comm},
             {"restart", std::string("parallel")},
             {"mean", e.mean},
             {"std_error", e.std_error},
             {"std_error_defined", e.std_error_defined},
             {"p50", e.p50},
             {"p90", e.p90},
             {"p99", e.p99},
             {"local_prep_attempts", e.totals.local_prep},
             {"link_attempts", e.totals.link}};
  for (std::size_t level = 0; level < e.totals.swap.size(); ++level) {
    row.push_back({"swap_attempts_level_" + std::to_string(level + 1),
                   static_cast<std::int64_t>(e.totals.swap[level])});
  }
  row.push_back({"analytic", c.analytic});
  row.push_back({"ratio", c.ratio});
  if (params.n <= 1 && policy.swap_comm == sim::SwapComm::off) {
    row.push_back({"oracle", sim::exact_expected_time_small(model, policy)});
  }
  if (shared.verbose) err << "simulated " << e.trials << " trials\n";
  emit(out, {row}, parse_format(shared.format));
  return kExitOk;
}

struct SweepArgs {
  std::string param;
  double from = 0.0;
  double to = 0.0;
  std::int64_t steps = 0;
  bool integer = false;
};

std::vector<double> sweep_grid(const SweepArgs& args, bool integer) {
  std::vector<double> grid;
  if (integer) {
    if (args.from != std::floor(args.from) || args.to != std::floor(args.to)) {
      throw UsageError("integer sweeps need integral --from and --to");
    }
    for (double v = args.from; v <= args.to; v += 1.0) grid.push_back(v);
  } else {
    if (args.steps < 1) throw UsageError("--steps must be at least 1");
    for (std::int64_t i = 0; i < args.steps; ++i) {
      const double t = args.steps == 1 ? 0.0 : static_cast<double>(i) / (args.steps - 1);
      grid.push_back(i == args.steps - 1 && args.steps > 1 ? args.to
                                                            : args.from + t * (args.to - args.from));
    }
  }
  if (grid.empty()) throw UsageError("sweep grid is empty");
  return grid;
}

int cmd_sweep(const Shared& shared, const SweepArgs& args, std::ostream& out,
              std::ostream& err) {
  const std::string key = key_name(args.param);
  if (!is_parameter_key(key)) throw ConfigError(key, "unknown sweep parameter '" + key + "'");
  const ProtocolParams base = resolve_params(shared);
  log_params(shared, base, err);
  const bool integer = args.integer || is_integer_parameter(key);
  const std::vector<double> grid = sweep_grid(args, integer);

  std::vector<Record> rows;
  std::size_t best = 0;
  double best_time = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ProtocolParams p = base;
    set_parameter(p, key, grid[i]);
    const ValidationResult check = validate(p);
    if (!check.ok()) {
      throw ConfigError(check.violations.front().field,
                        "grid point " + format_number(grid[i]) + " is invalid: " +
                            check.summary());
    }
    const RateReport r = report_or_infinite(p);
    if (r.t_total < best_time) {
      best_time = r.t_total;
      best = i;
    }
    Record row{{"param", key}};
    if (integer) {
      row.push_back({"value", static_cast<std::int64_t>(grid[i])});
    } else {
      row.push_back({"value", grid[i]});
    }
    for (Field& f : report_fields(r)) row.push_back(std::move(f));
    rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].push_back({"argmin", std::isfinite(best_time) && i == best});
  }
  emit(out, rows, parse_format(shared.format));
  return kExitOk;
}

int cmd_bsm_verify(const Shared& shared, int phases, std::optional<double> tolerance,
                   std::ostream& out, std::ostream& err) {
  if (phases < 1) throw UsageError("--phases must be at least 1");
  const std::vector<Check> checks = run_bsm_checks(phases, tolerance);
  std::vector<Record> rows;
  bool all = true;
  for (const Check& c : checks) {
    rows.push_back({{"check", c.name},
                    {"value", c.value},
                    {"tolerance", c.tolerance},
                    {"pass", c.pass}});
    all = all && c.pass;
  }
  emit(out, rows, parse_format(shared.format));
  if (all) {
    if (shared.verbose) err << checks.size() << " checks passed\n";
    return kExitOk;
  }
  for (const Check& c : checks) {
    if (!c.pass) {
      err << "check failed: " << c.name << " value " << format_number(c.value)
          << " exceeds tolerance " << format_number(c.tolerance) << '\n';
    }
  }
  return kExitCheckFailed;
}

int cmd_reproduce_paper(const Shared& shared, std::ostream& out, std::ostream& err) {
  const std::vector<Record> rows = reproduce_paper_records();
  emit(out, rows, parse_format(shared.format));
  bool all = true;
  for (const Record& r : rows) {
    for (const Field& f : r) {
      if (f.name == "pass" && std::holds_alternative<bool>(f.value) && !std::get<bool>(f.value)) {
        all = false;
        err << "reproduction failed: " << std::get<std::string>(r.front().value) << '\n';
      }
    }
  }
  return all ? kExitOk : kExitCheckFailed;
}

}  // namespace

std::vector<Record> reproduce_paper_records() {
  ProtocolParams four = paper_defaults();
  four.n = 4;
  ProtocolParams six = four;
  six.n = 6;

  struct Row {
    const char* quantity;
    const char* unit;
    double computed;
    double reference;
  };
  const Row rows[] = {
      {"t_total_n4", "s", rates::t_total(four).t_total, 4.4},
      {"t_total_n6", "s", rates::t_total(six).t_total, 0.84},
      {"balance_rate", "Hz", rates::balance_rate(four), 3.76e6},
      {"delta_f", "", rates::delta_f(4, 5e-6), 1.6e-4},
      {"optimal_n", "", static_cast<double>(rates::optimal_n(four, 1, 10).n), 6.0},
  };

  std::vector<Record> out;
  for (const Row& r : rows) {
    const double deviation = std::abs(r.computed - r.reference) / std::abs(r.reference);
    out.push_back({{"quantity", std::string(r.quantity)},
                   {"unit", std::string(r.unit)},
                   {"computed", r.computed},
                   {"reference", r.reference},
                   {"rel_deviation", deviation},
                   {"pass", deviation <= kReproduceTolerance},
                   {"not_computed", false},
                   {"note", std::string()}});
  }
  out.push_back({{"quantity", std::string("pr_protocol_t_total")},
                 {"unit", std::string("s")},
                 {"computed", std::monostate{}},
                 {"reference", 107.6},
                 {"rel_deviation", std::monostate{}},
                 {"pass", std::monostate{}},
                 {"not_computed", true},
                 {"note", std::string(kNotComputedLabel)}});
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum repeater protocol laboratory", "repeaterlab"};
  app.require_subcommand(1);
  app.footer(
      "Parameters come from the built-in defaults, then --config FILE, then\n"
      "--key value overrides; later sources take precedence.\n"
      "Exit codes: 0 success, 1 check failure, 2 usage or config error,\n"
      "3 a stage with zero success probability.");

  Shared shared;
  SimulateArgs sim_args;
  SweepArgs sweep_args;
  int phases = 4;
  std::optional<double> tolerance;

  CLI::App* rates_cmd = app.add_subcommand("rates", "Closed-form rates and total time");
  add_shared(rates_cmd, shared);
  add_overrides(rates_cmd, shared);

  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of the total time");
  add_shared(sim_cmd, shared);
  add_overrides(sim_cmd, shared);
  sim_cmd->add_option("--trials", sim_args.trials, "Number of trials");
  sim_cmd->add_option("--seed", sim_args.seed, "Root seed (default $REPEATERLAB_SEED)");
  sim_cmd->add_option("--swap-comm", sim_args.swap_comm, "Swap confirmation delay")
      ->check(CLI::IsMember({"on", "off"}));
  sim_cmd->add_option("--threads", sim_args.threads, "Worker threads (0: all cores)");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Rates over a grid of one parameter");
  add_shared(sweep_cmd, shared);
  add_overrides(sweep_cmd, shared);
  sweep_cmd->add_option("--param", sweep_args.param, "Parameter key")->required();
  sweep_cmd->add_option("--from", sweep_args.from, "First grid value")->required();
  sweep_cmd->add_option("--to", sweep_args.to, "Last grid value")->required();
  sweep_cmd->add_option("--steps", sweep_args.steps, "Number of grid points");
  sweep_cmd->add_flag("--integer", sweep_args.integer, "Unit-step integer grid");

  CLI::App* verify_cmd = app.add_subcommand("bsm-verify", "State-level pipeline checks");
  add_shared(verify_cmd, shared);
  verify_cmd->add_option("--phases", phases, "Phase grid size per site");
  verify_cmd->add_option("--tolerance", tolerance, "Tolerance for every check");

  CLI::App* repro_cmd =
      app.add_subcommand("reproduce-paper", "Compare against the reference numbers");
  add_shared(repro_cmd, shared);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (rates_cmd->parsed()) return cmd_rates(shared, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(shared, sim_args, out, err);
    if (sweep_cmd->parsed()) return cmd_sweep(shared, sweep_args, out, err);
    if (verify_cmd->parsed()) return cmd_bsm_verify(shared, phases, tolerance, out, err);
    if (repro_cmd->parsed()) return cmd_reproduce_paper(shared, out, err);
  } catch (const ConfigError& e) {
    err << "config error";
    if (!e.key().empty()) err << " (" << e.key() << ")";
    err << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const sim::SimulationError& e) {
    err << "aborted: " << e.what() << '\n';
    return kExitGuard;
  } catch (const std::domain_error& e) {
    err << "aborted: " << e.what() << '\n';
    return kExitGuard;
  }
  return kExitUsage;
}

}  // namespace repeaterlab::cli
