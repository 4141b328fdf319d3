#include "brw/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "brw/errors.hpp"
#include "brw/model_spec.hpp"

namespace brw {

namespace {

using nlohmann::json;

std::vector<double> parse_axis(const json& j, const char* name) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) out.push_back(v.get<double>());
  } else if (j.is_object()) {
    const double lo = j.at("min").get<double>();
    const double hi = j.value("max", lo);
    const int steps = j.value("steps", 1);
    if (steps < 1) throw ConfigError(name, "steps must be at least 1");
    for (int i = 0; i < steps; ++i) out.push_back(steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1));
  } else {
    throw ConfigError(name, "expected a number, a list or {min, max, steps}");
  }
  if (out.empty()) throw ConfigError(name, "grid axis is empty");
  for (double v : out)
    if (!std::isfinite(v)) throw ConfigError(name, "grid values must be finite");
  return out;
}

ReproductionModel build_model(const ExperimentConfig& c) {
  if (!c.model_json.is_null()) return model_from_json(c.model_json);
  if (c.model_spec.empty()) throw ConfigError("model", "no model given");
  return parse_model_spec(c.model_spec);
}

struct GridPoint {
  ComplexParameter lambda;
  double p;
};

std::vector<GridPoint> grid(const ExperimentConfig& c) {
  if (c.thetas.empty()) throw ConfigError("grid.theta", "grid axis is empty");
  if (c.gammas.empty()) throw ConfigError("grid.gamma", "grid axis is empty");
  if (c.ps.empty()) throw ConfigError("grid.p", "grid axis is empty");
  std::vector<GridPoint> g;
  for (double t : c.thetas)
    for (double y : c.gammas)
      for (double p : c.ps) g.push_back({{t, y}, p});
  return g;
}

std::string join_notes(const std::vector<std::string>& notes) {
  std::string s;
  for (const auto& n : notes) {
    if (!s.empty()) s += "; ";
    s += n;
  }
  return s;
}

VerdictOptions verdict_options(const ExperimentConfig& c) {
  VerdictOptions o;
  o.monte_carlo.seed = c.simulation.seed;
  return o;
}

// Prediction half of a row; `simulable` is false when the row cannot be simulated.
RegimeMapRow predict(const ReproductionModel& model, const GridPoint& g, const VerdictOptions& opts,
                     bool& simulable) {
  RegimeMapRow row;
  row.theta = g.lambda.theta;
  row.gamma = g.lambda.gamma;
  row.p = g.p;
  simulable = false;
  try {
    const VerdictReport r = decide({&model, g.lambda, g.p}, opts);
    row.case_label = r.case_label;
    row.predicted = r.verdict;
    row.theorem = r.theorem;
    std::tie(row.ratio_name, row.ratio_value) = key_ratio(r);
    row.note = join_notes(r.notes);
    if (r.case_label == CaseLabel::III) {
      row.excluded = "case_three";
    } else {
      simulable = true;
    }
  } catch (const OutOfStripError& e) {
    row.excluded = "out_of_strip";
    row.note = e.what();
  } catch (const PreconditionError& e) {
    row.excluded = "precondition";
    row.note = e.what();
  }
  return row;
}

bool predicts_convergence(Verdict v) { return v == Verdict::converges || v == Verdict::converges_sufficient_only; }

void score(RegimeReport& report) {
  report.scored = report.agreed = 0;
  report.exclusions.clear();
  for (const auto& row : report.rows) {
    if (!row.excluded.empty()) ++report.exclusions[row.excluded];
    if (row.agreement) {
      ++report.scored;
      if (*row.agreement) ++report.agreed;
    }
  }
  if (report.scored > 0)
    report.agreement_rate = static_cast<double>(report.agreed) / static_cast<double>(report.scored);
  else
    report.agreement_rate.reset();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

ExperimentConfig experiment_from_json(const json& doc) {
  ExperimentConfig c;
  if (!doc.is_object()) throw ConfigError("experiment", "expected a JSON object");
  const int version = doc.value("schema_version", kExperimentSchemaVersion);
  if (version != kExperimentSchemaVersion)
    throw ConfigError("schema_version", "unsupported experiment schema " + std::to_string(version));
  const std::string mode = doc.value("mode", "verify");
  if (mode == "verify") c.mode = ExperimentMode::verify;
  else if (mode == "sweep") c.mode = ExperimentMode::sweep;
  else throw ConfigError("mode", "expected verify or sweep, got " + mode);

  if (!doc.contains("model")) throw ConfigError("model", "missing");
  const auto& m = doc.at("model");
  if (m.is_string()) {
    c.model_spec = m.get<std::string>();
  } else if (m.is_object()) {
    c.model_json = m;
    c.model_spec = m.dump();
  } else {
    throw ConfigError("model", "expected a spec string or a model document");
  }

  if (!doc.contains("grid")) throw ConfigError("grid", "missing");
  const auto& g = doc.at("grid");
  c.thetas = g.contains("theta") ? parse_axis(g.at("theta"), "grid.theta") : std::vector<double>{0.0};
  if (!g.contains("gamma")) throw ConfigError("grid.gamma", "missing");
  c.gammas = parse_axis(g.at("gamma"), "grid.gamma");
  c.ps = g.contains("p") ? parse_axis(g.at("p"), "grid.p") : std::vector<double>{2.0};

  if (doc.contains("simulation")) {
    const auto& s = doc.at("simulation");
    c.simulation.generations = s.value("generations", c.simulation.generations);
    c.simulation.replicas = s.value("replicas", c.simulation.replicas);
    c.simulation.seed = s.value("seed", c.simulation.seed);
    c.simulation.max_population = s.value("max_population", c.simulation.max_population);
    c.simulation.threads = s.value("threads", c.simulation.threads);
  }
  if (c.simulation.generations < 1) throw ConfigError("simulation.generations", "must be at least 1");
  if (c.simulation.replicas < 2) throw ConfigError("simulation.replicas", "must be at least 2");
  if (doc.contains("diagnostic")) {
    c.window.first = doc.at("diagnostic").value("first", c.window.first);
    c.window.last = doc.at("diagnostic").value("last", c.window.last);
  }
  c.boundary_band = doc.value("boundary_band", c.boundary_band);
  if (!(c.boundary_band >= 0.0)) throw ConfigError("boundary_band", "must be nonnegative");
  c.allow_mc = doc.value("allow_mc", false);
  if (doc.contains("output")) {
    c.csv_path = doc.at("output").value("csv", "");
    c.json_path = doc.at("output").value("json", "");
  }
  return c;
}

json experiment_to_json(const ExperimentConfig& c) {
  json doc;
  doc["schema_version"] = kExperimentSchemaVersion;
  doc["mode"] = c.mode == ExperimentMode::verify ? "verify" : "sweep";
  if (!c.model_json.is_null()) doc["model"] = c.model_json;
  else doc["model"] = c.model_spec;
  doc["grid"] = {{"theta", c.thetas}, {"gamma", c.gammas}, {"p", c.ps}};
  doc["simulation"] = {{"generations", c.simulation.generations},
                       {"replicas", c.simulation.replicas},
                       {"seed", c.simulation.seed},
                       {"max_population", c.simulation.max_population},
                       {"threads", c.simulation.threads}};
  doc["diagnostic"] = {{"first", c.window.first}, {"last", c.window.last}};
  doc["boundary_band"] = c.boundary_band;
  doc["allow_mc"] = c.allow_mc;
  doc["output"] = {{"csv", c.csv_path}, {"json", c.json_path}};
  return doc;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return experiment_from_json(doc);
}

std::pair<std::string, std::optional<double>> key_ratio(const VerdictReport& report) {
  for (const char* name : {"centered_ratio", "quadratic_ratio", "alpha_ratio", "real_ratio"}) {
    if (const auto* c = report.find(name); c && std::isfinite(c->lhs_value)) return {name, c->lhs_value};
  }
  return {"", std::nullopt};
}

RegimeReport run_sweep(const ExperimentConfig& config) {
  const ReproductionModel model = build_model(config);
  if (!config.allow_mc && (!model.metadata().has_analytic_laplace || !model.laplace_analytic({0.0, 0.0})))
    throw ConfigError("allow_mc", "model has no closed-form m(lambda); pass --allow-mc to use Monte Carlo");
  const auto opts = verdict_options(config);
  RegimeReport report;
  for (const auto& g : grid(config)) {
    bool simulable = false;
    report.rows.push_back(predict(model, g, opts, simulable));
  }
  score(report);
  return report;
}

RegimeReport run_verify(const ExperimentConfig& config) {
  const ReproductionModel model = build_model(config);
  const auto opts = verdict_options(config);
  const auto points = grid(config);

  RegimeReport report;
  std::vector<bool> simulable(points.size());
  std::vector<ComplexParameter> lambdas;
  std::vector<std::size_t> lambda_of(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool s = false;
    report.rows.push_back(predict(model, points[i], opts, s));
    simulable[i] = s;
    if (!s) continue;
    auto it = std::find(lambdas.begin(), lambdas.end(), points[i].lambda);
    lambda_of[i] = static_cast<std::size_t>(it - lambdas.begin());
    if (it == lambdas.end()) lambdas.push_back(points[i].lambda);
  }

  if (!lambdas.empty()) {
    // One tree pass per replica serves the whole lambda grid, so a cap breach
    // excludes every simulated row.
    SimConfig sim = config.simulation;
    sim.lambdas = lambdas;
    sim.companion_thetas.clear();
    std::optional<TrajectoryBatch> batch;
    std::string failure;
    try {
      batch = simulate_trajectories(model, sim);
    } catch (const PopulationCapError& e) {
      failure = e.what();
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!simulable[i]) continue;
      auto& row = report.rows[i];
      if (!batch) {
        row.excluded = "cap";
        row.note = row.note.empty() ? failure : row.note + "; " + failure;
        continue;
      }
      try {
        const auto d = convergence_diagnostic(*batch, lambda_of[i], points[i].p, config.window, row.ratio_value);
        row.empirical = d.verdict;
      } catch (const PreconditionError& e) {
        row.excluded = "precondition";
        row.note = row.note.empty() ? e.what() : row.note + "; " + e.what();
        continue;
      }
      if (row.ratio_value && std::abs(*row.ratio_value - 1.0) < config.boundary_band) {
        row.excluded = "boundary";
        continue;
      }
      const Verdict v = *row.predicted;
      if (*row.empirical == EmpiricalVerdict::inconclusive || v == Verdict::indeterminate) continue;
      row.agreement = predicts_convergence(v) ? *row.empirical == EmpiricalVerdict::bounded
                                              : *row.empirical == EmpiricalVerdict::growing;
    }
  }
  score(report);
  return report;
}

void write_regime_csv(const RegimeReport& report, std::ostream& out) {
  out << "# schema_version=" << kRegimeCsvSchemaVersion << '\n';
  out << "theta,gamma,p,case,predicted,theorem,ratio_name,ratio_value,empirical,agreement,excluded,note\n";
  for (const auto& r : report.rows) {
    out << format_double(r.theta) << ',' << format_double(r.gamma) << ',' << format_double(r.p) << ','
        << (r.case_label ? std::string(case_label_name(*r.case_label)) : std::string()) << ','
        << (r.predicted ? std::string(verdict_name(*r.predicted)) : std::string()) << ',' << csv_field(r.theorem)
        << ',' << r.ratio_name << ',' << opt_double(r.ratio_value) << ','
        << (r.empirical ? std::string(empirical_verdict_name(*r.empirical)) : std::string()) << ','
        << (r.agreement ? (*r.agreement ? "true" : "false") : "") << ',' << r.excluded << ','
        << csv_field(r.note) << '\n';
  }
}

json regime_report_json(const RegimeReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json j;
    j["theta"] = r.theta;
    j["gamma"] = r.gamma;
    j["p"] = r.p;
    j["case"] = r.case_label ? json(case_label_name(*r.case_label)) : json(nullptr);
    j["predicted"] = r.predicted ? json(verdict_name(*r.predicted)) : json(nullptr);
    j["theorem"] = r.theorem;
    j["ratio_name"] = r.ratio_name;
    j["ratio_value"] = r.ratio_value ? json(*r.ratio_value) : json(nullptr);
    j["empirical"] = r.empirical ? json(empirical_verdict_name(*r.empirical)) : json(nullptr);
    j["agreement"] = r.agreement ? json(*r.agreement) : json(nullptr);
    j["excluded"] = r.excluded.empty() ? json(nullptr) : json(r.excluded);
    j["note"] = r.note;
    rows.push_back(std::move(j));
  }
  return {{"schema_version", kRegimeCsvSchemaVersion},
          {"rows", rows},
          {"scored", report.scored},
          {"agreed", report.agreed},
          {"agreement_rate", report.agreement_rate ? json(*report.agreement_rate) : json(nullptr)},
          {"exclusions", report.exclusions}};
}

}  // namespace brw
