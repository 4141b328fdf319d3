// brwlab: command-line front end for the branching-random-walk library.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "brw/errors.hpp"
#include "brw/estimators.hpp"
#include "brw/harness.hpp"
#include "brw/kernels/kernels.hpp"
#include "brw/laplace.hpp"
#include "brw/model_spec.hpp"
#include "brw/models.hpp"
#include "brw/simulator.hpp"
#include "brw/trajectory_io.hpp"
#include "brw/verdict.hpp"

namespace {

using nlohmann::json;
using namespace brw;

constexpr int kReportSchemaVersion = 1;
constexpr int kExitError = 3;

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out;
  bool json = false;
  std::string config;
  std::string isa = "auto";
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(what, "not a number: " + s);
  }
  if (used != s.size()) throw ConfigError(what, "not a number: " + s);
  return v;
}

// "t1,g1;t2,g2"
std::vector<ComplexParameter> parse_lambdas(const std::string& s) {
  std::vector<ComplexParameter> out;
  for (const auto& pair : split(s, ';')) {
    const auto xy = split(pair, ',');
    if (xy.size() != 2) throw ConfigError("lambdas", "expected theta,gamma pairs separated by ';'");
    out.push_back({parse_number(xy[0], "lambdas"), parse_number(xy[1], "lambdas")});
  }
  return out;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& v : split(s, ',')) out.push_back(parse_number(v, what));
  return out;
}

// "a..b"
DiagnosticWindow parse_window(const std::string& s) {
  DiagnosticWindow w;
  if (s.empty()) return w;
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw ConfigError("window", "expected a..b");
  w.first = static_cast<int>(parse_number(s.substr(0, dots), "window"));
  const std::string rest = s.substr(dots + 2);
  w.last = rest.empty() ? -1 : static_cast<int>(parse_number(rest, "window"));
  return w;
}

// "min:max:steps" or a comma list.
std::vector<double> parse_axis(const std::string& s, const std::string& what) {
  if (s.find(':') == std::string::npos) return parse_list(s, what);
  const auto parts = split(s, ':');
  if (parts.size() != 3) throw ConfigError(what, "expected min:max:steps");
  const double lo = parse_number(parts[0], what), hi = parse_number(parts[1], what);
  const int steps = static_cast<int>(parse_number(parts[2], what));
  if (steps < 1) throw ConfigError(what, "steps must be at least 1");
  std::vector<double> out;
  for (int i = 0; i < steps; ++i) out.push_back(steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1));
  return out;
}

json condition_json(const ConditionRecord& c) {
  return {{"name", c.name},
          {"inequality", c.inequality},
          {"lhs", std::isfinite(c.lhs_value) ? json(c.lhs_value) : json(nullptr)},
          {"lhs_text", c.lhs_text},
          {"threshold", c.threshold},
          {"status", condition_status_name(c.status)}};
}

json verdict_json(const VerdictReport& r) {
  json conds = json::array();
  for (const auto& c : r.conditions) conds.push_back(condition_json(c));
  return {{"schema_version", kReportSchemaVersion},
          {"verdict", verdict_name(r.verdict)},
          {"theorem", r.theorem},
          {"case", r.case_label ? json(case_label_name(*r.case_label)) : json(nullptr)},
          {"alpha_used", r.alpha_used ? json(*r.alpha_used) : json(nullptr)},
          {"r_used", r.r_used ? json(*r.r_used) : json(nullptr)},
          {"conditions", conds},
          {"notes", r.notes}};
}

json estimate_json(const MCEstimate& e) { return {{"mean", e.mean}, {"se", e.se}, {"n", e.n}}; }

void emit(const json& j, const Globals& g) {
  if (!g.out.empty()) {
    std::ofstream f(g.out);
    if (!f) throw ConfigError("out", "cannot write " + g.out);
    f << j.dump(2) << '\n';
  } else {
    std::cout << j.dump(2) << '\n';
  }
}

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw ConfigError("out", "cannot write " + path);
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"brwlab: branching random walk martingale laboratory"};
  app.require_subcommand(1);
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  auto* threads_opt = app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--out", g.out, "Output file (default stdout)");
  app.add_flag("--json", g.json, "Emit JSON instead of text where both exist");
  app.add_option("--config", g.config, "Experiment JSON for sweep/verify");
  app.add_option("--isa", g.isa, "Kernel ISA: auto, scalar or avx2")->capture_default_str();
  for (auto* o : app.get_options()) o->configurable(false);
  app.fallthrough();

  // mlam
  auto* mlam = app.add_subcommand("mlam", "Evaluate m(lambda) and classify the case");
  std::string model_spec;
  double theta = 0.0, gamma = 0.0, p = 2.0;
  std::uint64_t samples = 100000;
  mlam->add_option("--model", model_spec, "Model spec")->required();
  mlam->add_option("--theta", theta);
  mlam->add_option("--gamma", gamma);
  mlam->add_option("--samples", samples, "Monte Carlo samples when no closed form")->capture_default_str();

  // verdict
  auto* verdict = app.add_subcommand("verdict", "Decide L^p convergence of Z_n(lambda)");
  verdict->add_option("--model", model_spec)->required();
  verdict->add_option("--theta", theta);
  verdict->add_option("--gamma", gamma);
  verdict->add_option("--p", p)->required();
  verdict->add_option("--samples", samples)->capture_default_str();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulate trajectories to CSV");
  std::string lambdas_s, companions_s;
  SimConfig sim;
  bool quadratic = false;
  simulate->add_option("--model", model_spec)->required();
  simulate->add_option("--lambdas", lambdas_s, "theta,gamma pairs separated by ';'")->required();
  simulate->add_option("--companions", companions_s, "Companion thetas, comma separated");
  simulate->add_option("--generations", sim.generations)->capture_default_str();
  simulate->add_option("--replicas", sim.replicas)->capture_default_str();
  simulate->add_option("--max-pop", sim.max_population)->capture_default_str();
  simulate->add_flag("--quadratic-increments", quadratic, "Record per-generation quadratic increment sums");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Moment diagnostics on a trajectory CSV");
  std::string traj, window_s;
  diagnose->add_option("--traj", traj)->required();
  diagnose->add_option("--p", p)->required();
  diagnose->add_option("--window", window_s, "Generation window a..b");

  // sweep / verify
  auto* sweep = app.add_subcommand("sweep", "Analytic regime map over a (theta, gamma, p) grid");
  auto* verify = app.add_subcommand("verify", "Predicted verdicts against simulation diagnostics");
  std::string theta_axis = "0", gamma_axis, p_axis = "2";
  bool allow_mc = false;
  for (auto* sc : {sweep, verify}) {
    sc->add_option("--model", model_spec);
    sc->add_option("--thetas", theta_axis, "min:max:steps or list");
    sc->add_option("--gammas", gamma_axis, "min:max:steps or list");
    sc->add_option("--ps", p_axis, "min:max:steps or list");
  }
  sweep->add_flag("--allow-mc", allow_mc, "Permit Monte Carlo m(lambda)");
  verify->add_option("--generations", sim.generations)->capture_default_str();
  verify->add_option("--replicas", sim.replicas)->capture_default_str();
  verify->add_option("--max-pop", sim.max_population)->capture_default_str();

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Closed-form oracles");
  oracle->require_subcommand(1);
  auto* frac = oracle->add_subcommand("frac-moment", "Fractional moment via the Laplace-transform integral");
  std::string dist = "exp";
  double a = 0.5;
  std::uint64_t n_samples = 100000;
  frac->add_option("--dist", dist, "exp, const, uniform")->capture_default_str();
  frac->add_option("--a", a)->capture_default_str();
  frac->add_option("--n", n_samples)->capture_default_str();
  auto* stable = oracle->add_subcommand("stable-sum", "Scaled sums of squared Pareto variables");
  StableSumOracleSpec ss;
  stable->add_option("--alpha", ss.alpha)->capture_default_str();
  stable->add_option("--b", ss.b)->capture_default_str();
  stable->add_option("--p", ss.p)->capture_default_str();
  stable->add_option("--k", ss.k)->capture_default_str();
  stable->add_option("--trials", ss.trials)->capture_default_str();
  auto* hill = oracle->add_subcommand("hill", "Hill tail index of Pareto samples");
  double hill_alpha = 1.5;
  std::size_t hill_k = 0;
  hill->add_option("--alpha", hill_alpha)->capture_default_str();
  hill->add_option("--n", n_samples)->capture_default_str();
  hill->add_option("--k", hill_k, "Order statistics (0 = n^0.6)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (g.isa != "auto") kernels::select_isa(kernels::parse_isa(g.isa));
    const MonteCarloOptions mc{samples, g.seed};

    if (*mlam) {
      const auto model = parse_model_spec(model_spec);
      const ComplexParameter lambda{theta, gamma};
      const auto m = evaluate_m(model, lambda, mc);
      const auto c = classify_case(model, lambda, kDefaultCaseTolerance, mc);
      json j{{"schema_version", kReportSchemaVersion},
             {"value_re", m.value.real()},
             {"value_im", m.value.imag()},
             {"modulus", std::abs(m.value)},
             {"m_theta", c.m_theta},
             {"case", case_label_name(c.label)},
             {"method", eval_method_name(m.method)},
             {"uncertain_boundary", c.uncertain_boundary}};
      if (m.se) j["se"] = *m.se;
      if (m.samples) j["samples"] = *m.samples;
      emit(j, g);
      return 0;
    }

    if (*verdict) {
      const auto model = parse_model_spec(model_spec);
      VerdictOptions opts;
      opts.monte_carlo = mc;
      const auto r = decide({&model, {theta, gamma}, p}, opts);
      if (g.json || !g.out.empty()) {
        emit(verdict_json(r), g);
      } else {
        std::cout << verdict_name(r.verdict) << " (" << r.theorem << ")\n";
        for (const auto& c : r.conditions)
          std::cout << "  " << c.name << ": " << c.inequality << "  lhs=" << c.lhs_text << "  "
                    << condition_status_name(c.status) << '\n';
        for (const auto& n : r.notes) std::cout << "  note: " << n << '\n';
      }
      switch (r.verdict) {
        case Verdict::converges:
        case Verdict::converges_sufficient_only: return 0;
        case Verdict::diverges: return 1;
        case Verdict::indeterminate: return 2;
      }
      return 2;
    }

    if (*simulate) {
      const auto model = parse_model_spec(model_spec);
      sim.seed = g.seed;
      sim.threads = g.threads;
      sim.lambdas = parse_lambdas(lambdas_s);
      sim.companion_thetas = parse_list(companions_s, "companions");
      sim.quadratic_increments = quadratic;
      const auto batch = simulate_trajectories(model, sim);
      std::ofstream file;
      write_trajectory_csv(batch, open_out(g.out, file));
      if (!g.out.empty() && g.out != "-") {
        std::ofstream side(g.out + ".json");
        if (!side) throw ConfigError("out", "cannot write sidecar " + g.out + ".json");
        side << trajectory_sidecar(batch, model_spec, model_to_json(model)).dump(2) << '\n';
      }
      return 0;
    }

    if (*diagnose) {
      std::ifstream in(traj);
      if (!in) throw ConfigError("traj", "cannot open " + traj);
      std::optional<json> side;
      if (std::ifstream s(traj + ".json"); s) side = json::parse(s);
      const auto batch = read_trajectory_csv(in, side ? &*side : nullptr);
      std::optional<ReproductionModel> model;
      if (side && side->contains("model")) model = model_from_json(side->at("model"));
      const auto window = parse_window(window_s);
      json per = json::array();
      for (std::size_t j = 0; j < batch.lambda_count(); ++j) {
        std::optional<double> predicted;
        if (model && p == 2.0) predicted = quadratic_increment_rate(*model, batch.config.lambdas[j]);
        const auto d = convergence_diagnostic(batch, j, p, window, predicted);
        json moments = json::array();
        for (int n = 0; n <= batch.generations(); ++n) moments.push_back(estimate_json(pth_moment(batch, j, p, n)));
        per.push_back({{"lambda_index", j},
                       {"theta", batch.config.lambdas[j].theta},
                       {"gamma", batch.config.lambdas[j].gamma},
                       {"verdict", empirical_verdict_name(d.verdict)},
                       {"basis", d.basis},
                       {"slope", d.slope},
                       {"slope_ci", {d.slope_lo, d.slope_hi}},
                       {"increment_rate", d.increment_rate},
                       {"increment_rate_ci", {d.rate_lo, d.rate_hi}},
                       {"predicted_rate", predicted ? json(*predicted) : json(nullptr)},
                       {"cauchy_rates", d.cauchy_rates},
                       {"moments", moments},
                       {"notes", d.notes}});
      }
      emit({{"schema_version", kReportSchemaVersion}, {"p", p}, {"replicas", batch.replicas.size()},
            {"lambdas", per}},
           g);
      return 0;
    }

    if (*sweep || *verify) {
      ExperimentConfig cfg;
      if (!g.config.empty()) {
        cfg = load_experiment(g.config);
      } else {
        if (model_spec.empty()) throw ConfigError("model", "--model or --config is required");
        if (gamma_axis.empty()) throw ConfigError("gammas", "--gammas or --config is required");
        cfg.model_spec = model_spec;
        cfg.thetas = parse_axis(theta_axis, "thetas");
        cfg.gammas = parse_axis(gamma_axis, "gammas");
        cfg.ps = parse_axis(p_axis, "ps");
        cfg.simulation.generations = sim.generations;
        cfg.simulation.replicas = sim.replicas;
        cfg.simulation.max_population = sim.max_population;
        cfg.allow_mc = allow_mc;
      }
      if (!g.config.empty() && allow_mc) cfg.allow_mc = true;
      if (seed_opt->count() > 0 || g.config.empty()) cfg.simulation.seed = g.seed;
      if (threads_opt->count() > 0 || g.config.empty()) cfg.simulation.threads = g.threads;
      const RegimeReport report = *sweep ? run_sweep(cfg) : run_verify(cfg);
      const std::string csv = !g.out.empty() ? g.out : cfg.csv_path;
      if (g.json && csv.empty()) {
        std::cout << regime_report_json(report).dump(2) << '\n';
      } else {
        std::ofstream file;
        write_regime_csv(report, open_out(csv, file));
      }
      if (!cfg.json_path.empty()) {
        std::ofstream j(cfg.json_path);
        if (!j) throw ConfigError("output.json", "cannot write " + cfg.json_path);
        j << regime_report_json(report).dump(2) << '\n';
      }
      if (g.json && !csv.empty()) std::cout << regime_report_json(report).dump(2) << '\n';
      return 0;
    }

    if (*frac) {
      std::vector<double> xs(n_samples);
      RandomStream rng(g.seed, 0);
      double exact = 0.0;
      if (dist == "exp") {
        std::exponential_distribution<double> d(1.0);
        for (auto& x : xs) x = d(rng);
        exact = std::tgamma(1.0 + a);
      } else if (dist == "const") {
        std::fill(xs.begin(), xs.end(), 1.0);
        exact = 1.0;
      } else if (dist == "uniform") {
        for (auto& x : xs) x = rng.uniform();
        exact = 1.0 / (1.0 + a);
      } else {
        throw ConfigError("dist", "expected exp, const or uniform");
      }
      const auto est = fractional_moment_transform(xs, a);
      std::vector<double> pw(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) pw[i] = std::pow(xs[i], a);
      const auto direct = xs.size() >= 2 ? mean_estimate(pw) : MCEstimate{pw[0], 0.0, 1};
      emit({{"schema_version", kReportSchemaVersion},
            {"dist", dist},
            {"a", a},
            {"transform", estimate_json(est)},
            {"direct", estimate_json(direct)},
            {"exact", exact},
            {"rel_err", std::abs(est.mean - exact) / exact}},
           g);
      return 0;
    }

    if (*stable) {
      const auto r = stable_sum_limit_check(ss, g.seed);
      emit({{"schema_version", kReportSchemaVersion},
            {"alpha", ss.alpha},
            {"b", ss.b},
            {"p", ss.p},
            {"k", ss.k},
            {"trials", ss.trials},
            {"empirical", estimate_json(r.empirical)},
            {"empirical_direct", estimate_json(r.empirical_direct)},
            {"theoretical", r.theoretical},
            {"theoretical_quadrature", r.theoretical_quadrature},
            {"rel_err", r.rel_err},
            {"rel_err_direct", r.rel_err_direct}},
           g);
      return 0;
    }

    if (*hill) {
      std::vector<double> xs(n_samples);
      RandomStream rng(g.seed, 0);
      for (auto& x : xs) x = std::pow(rng.uniform_positive(), -1.0 / hill_alpha);
      const auto t = hill_tail_index(xs, hill_k);
      emit({{"schema_version", kReportSchemaVersion},
            {"alpha_hat", t.alpha_hat},
            {"k", t.k},
            {"ci95", {t.ci_lo, t.ci_hi}},
            {"lattice_warning", t.lattice_warning}},
           g);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
