// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when everything passes).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "repeaterlab/fock.hpp"
#include "repeaterlab/optics.hpp"
#include "repeaterlab/rates.hpp"
#include "repeaterlab/sim.hpp"

using namespace repeaterlab;
using fock::Arm;
using fock::ModeRegistry;
using fock::PureState;
using fock::WeightedEnsemble;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

ProtocolParams with_n(int n) {
  ProtocolParams p = paper_defaults();
  p.n = n;
  return p;
}

ProtocolParams ideal() {
  ProtocolParams p = paper_defaults();
  p.eta_p = p.eta_s = p.eta_e1 = p.eta_e2 = p.eta_d = 1.0;
  return p;
}

double accepted(const std::vector<optics::BsmBranch>& branches) {
  double total = 0.0;
  for (const auto& b : branches) {
    if (optics::classify(b.pattern) != optics::BsmOutcome::reject) total += b.probability;
  }
  return total;
}

Outcome reference_numbers() {
  Outcome o;
  const double t4 = rates::t_total(with_n(4)).t_total;
  const double t6 = rates::t_total(with_n(6)).t_total;
  const double balance = rates::balance_rate(with_n(4));
  const double df = rates::delta_f(4, 5e-6);
  const int best = rates::optimal_n(paper_defaults(), 1, 10).n;
  o.require(t4 >= 4.31 && t4 <= 4.49, fmt("t_total(n=4)=%.6g", t4));
  o.require(t6 >= 0.823 && t6 <= 0.857, fmt("t_total(n=6)=%.6g", t6));
  o.require(balance >= 3.72e6 && balance <= 3.80e6, fmt("balance_rate=%.6g", balance));
  o.require(df == 1.6e-4, fmt("delta_f=%.17g", df));
  o.require(best == 6, fmt("optimal n=%g", best));
  o.detail = o.pass ? fmt("t4=%.4f s t6=%.4f s", t4, t6) + fmt(" r*=%.4g Hz", balance) +
                          fmt(" dF=%.3g n*=%g", df, best)
                    : o.detail;
  return o;
}

Outcome engine_formula() {
  Outcome o;
  std::vector<ProtocolParams> sets = {paper_defaults()};
  std::mt19937_64 rng(20260419);
  std::uniform_real_distribution<double> eff(0.05, 1.0);
  std::uniform_real_distribution<double> link_length(10.0, 200.0);
  for (int i = 0; i < 20; ++i) {
    ProtocolParams p = paper_defaults();
    p.eta_p = eff(rng);
    p.eta_s = eff(rng);
    p.eta_e1 = eff(rng);
    p.eta_e2 = eff(rng);
    p.eta_d = eff(rng);
    p.l_att_km = 10.0 + 30.0 * eff(rng);
    p.n = static_cast<int>(rng() % 7);
    p.l_km = std::ldexp(link_length(rng), p.n);
    sets.push_back(p);
  }
  double worst = 0.0;
  for (const ProtocolParams& p : sets) {
    const double rel[] = {
        std::abs(optics::local_entanglement_pipeline(p, {0.7}, {2.1}).accept_prob /
                     rates::p_local(p) - 1.0),
        std::abs(optics::link_pipeline(p).accept_prob / rates::p_link(p) - 1.0),
        std::abs(optics::swap_pipeline(p).accept_prob / rates::p_swap(p) - 1.0)};
    for (double r : rel) worst = std::max(worst, r);
  }
  o.require(worst <= 1e-9, fmt("max relative deviation %.3g", worst));
  if (o.pass) o.detail = fmt("%g parameter sets, max relative deviation %.3g", sets.size(), worst);
  return o;
}

Outcome bsm_correctness() {
  Outcome o;
  double infidelity = 0.0;
  double spread = 0.0;
  for (const ProtocolParams& p : {paper_defaults(), ideal()}) {
    const double reference = optics::local_entanglement_pipeline(p, {0.0}, {0.0}).accept_prob;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        const auto report = optics::local_entanglement_pipeline(
            p, {2.0 * std::numbers::pi * i / 4}, {2.0 * std::numbers::pi * j / 4});
        o.require(report.heralds.size() == 4, "missing accepting pattern");
        infidelity = std::max(infidelity, 1.0 - report.min_fidelity());
        spread = std::max(spread, std::abs(report.accept_prob - reference) / reference);
      }
    }
  }
  for (const ProtocolParams& p : {paper_defaults(), ideal()}) {
    infidelity = std::max(infidelity, 1.0 - optics::link_pipeline(p).min_fidelity());
    infidelity = std::max(infidelity, 1.0 - optics::swap_pipeline(p).min_fidelity());
  }
  o.require(infidelity <= 1e-9, fmt("corrected infidelity %.3g", infidelity));
  o.require(spread <= 1e-10, fmt("phase dependence %.3g", spread));

  const auto modes = optics::BsmNetwork::input_modes("a", "b");
  double psi = 0.0;
  for (double sign : {1.0, -1.0}) {
    PureState s{ModeRegistry({modes.begin(), modes.end()})};
    s.add({1, 0, 0, 1}, std::numbers::sqrt2 / 2.0);
    s.add({0, 1, 1, 0}, sign * std::numbers::sqrt2 / 2.0);
    psi += accepted(optics::apply_bsm(WeightedEnsemble(s), 1.0, 0.0));
  }
  o.require(psi == 0.0, fmt("psi-class acceptance %.3g", psi));

  ProtocolParams lossless = ideal();
  lossless.l_att_km = 1e300;
  const double ideal_accept[] = {
      optics::local_entanglement_pipeline(ideal(), {0.4}, {1.9}).accept_prob,
      optics::link_pipeline(lossless).accept_prob, optics::swap_pipeline(ideal()).accept_prob};
  for (double a : ideal_accept) o.require(std::abs(a - 0.5) <= 1e-10, fmt("ideal accept %.17g", a));
  if (o.pass) {
    o.detail = fmt("max infidelity %.3g, phase spread %.3g, psi acceptance %g", infidelity,
                   spread, psi);
  }
  return o;
}

Outcome filtering() {
  Outcome o;
  const ModeRegistry reg({optics::t_mode("L", Arm::u), optics::t_mode("L", Arm::d),
                          optics::t_mode("R", Arm::u), optics::t_mode("R", Arm::d)});
  const std::vector<fock::Occupation> components = {
      {0, 0, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0},
      {0, 0, 0, 1}, {1, 0, 0, 1}, {0, 1, 1, 0}};
  double worst = 0.0;
  for (const auto& occ : components) {
    PureState s(reg);
    s.add(occ, 1.0);
    worst = std::max(worst, optics::herald_local(WeightedEnsemble(s), 1.0, 1.0).accept_prob);
  }
  o.require(worst <= 1e-12, fmt("spurious acceptance %.3g", worst));
  if (o.pass) o.detail = fmt("max spurious acceptance %g over %g components", worst, components.size());
  return o;
}

Outcome dark_state() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coupling(-10.0, 10.0);
  double worst = 0.0;
  for (int atoms = 1; atoms <= 3; ++atoms) {
    for (int i = 0; i < 100; ++i) {
      worst = std::max(worst, fock::dark_state_residual(coupling(rng), coupling(rng), atoms));
    }
  }
  o.require(worst < 1e-12, fmt("residual %.3g", worst));
  if (o.pass) o.detail = fmt("max residual %.3g", worst);
  return o;
}

Outcome oracle_agreement() {
  Outcome o;
  std::string summary;
  for (int n : {0, 1}) {
    const ProtocolParams p = with_n(n);
    const sim::Estimate e = sim::estimate(p, {}, 100000, 2026 + n);
    const double oracle = sim::exact_expected_time_small(p, {});
    const double z = (e.mean - oracle) / e.std_error;
    o.require(std::abs(z) <= 3.0, fmt("n=%g z=%.3f", n, z));
    summary += fmt("n=%g z=%.2f ", n, z);
  }
  auto emit = [] {
    std::ostringstream out;
    std::ostringstream err;
    cli::run({"simulate", "--trials", "1000", "--seed", "7", "--format", "jsonl"}, out, err);
    return out.str();
  };
  const std::string first = emit();
  o.require(!first.empty() && first == emit(), "estimate output differs between runs");
  if (o.pass) o.detail = summary + "output byte-identical";
  return o;
}

Outcome approximation_audit() {
  Outcome o;
  const sim::Comparison c = sim::compare_analytic(with_n(4), {}, 10000, 4);
  const double sigma = c.ratio_std_error / c.ratio;
  o.require(c.ratio >= 1.0 - 3.0 * sigma && c.ratio <= 8.0,
            fmt("ratio %.4f (rel sigma %.3g)", c.ratio, sigma));
  o.detail = fmt("mc mean %.4g s vs analytic %.4g s, ratio %.3f", c.mc.mean, c.analytic, c.ratio) +
             (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome reference_only() {
  Outcome o;
  const auto rows = cli::reproduce_paper_records();
  bool found = false;
  for (const auto& row : rows) {
    bool not_computed = false;
    bool labeled = false;
    bool empty_value = false;
    for (const auto& f : row) {
      if (f.name == "not_computed") not_computed = std::get<bool>(f.value);
      if (f.name == "note" && std::holds_alternative<std::string>(f.value)) {
        labeled = std::get<std::string>(f.value) == "reference value, not computed";
      }
      if (f.name == "computed") empty_value = std::holds_alternative<std::monostate>(f.value);
    }
    if (not_computed) {
      found = true;
      o.require(labeled, "annotation row lacks the label");
      o.require(empty_value, "annotation row carries a computed value");
    }
  }
  o.require(found, "no annotation row");
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run({"reproduce-paper", "--format", "csv"}, out, err);
  o.require(code == 0, "reproduce-paper failed");
  o.require(out.str().find("reference value, not computed") != std::string::npos,
            "label missing from output");
  if (o.pass) o.detail = "107.6 s carried as a labeled reference row";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "reference-number reproduction", 1.0, reference_numbers},
      {2, "engine-formula equivalence", 30.0, engine_formula},
      {3, "BSM correctness", 30.0, bsm_correctness},
      {4, "filtering property", 0.0, filtering},
      {5, "dark-state check", 5.0, dark_state},
      {6, "Monte Carlo vs oracle", 120.0, oracle_agreement},
      {7, "total-time approximation audit", 300.0, approximation_audit},
      {8, "comparison protocol not reproduced", 0.0, reference_only},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && seconds >= c.budget_s) {
      o.pass = false;
      o.detail += fmt(" (over budget: %.2f s >= %.0f s)", seconds, c.budget_s);
    }
    std::printf("%s criterion %d: %s [%.2f s] %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                seconds, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed;
}
