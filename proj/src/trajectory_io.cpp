#include "brw/trajectory_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "brw/errors.hpp"

namespace brw {

namespace {

constexpr const char* kHeader = "replica,n,lambda_index,z_re,z_im,companion_index,z_real_companion,population";

void put(std::string& line, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, r.ptr);
}

void put(std::string& line, std::uint64_t v) {
  char buf[24];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, r.ptr);
}

template <typename T>
T parse_field(std::string_view s, std::size_t line_no) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw ConfigError("traj", "malformed field '" + std::string(s) + "' on line " + std::to_string(line_no));
  return v;
}

}  // namespace

void write_trajectory_csv(const TrajectoryBatch& batch, std::ostream& out) {
  out << "# schema_version=" << kTrajectorySchemaVersion << '\n' << kHeader << '\n';
  const std::size_t nl = batch.lambda_count(), nc = batch.companion_count();
  const std::size_t rows = std::max<std::size_t>(1, std::max(nl, nc));
  std::string line;
  for (std::size_t r = 0; r < batch.replicas.size(); ++r) {
    for (int n = 0; n <= batch.generations(); ++n) {
      for (std::size_t k = 0; k < rows; ++k) {
        line.clear();
        put(line, static_cast<std::uint64_t>(r));
        line += ',';
        put(line, static_cast<std::uint64_t>(n));
        line += ',';
        if (k < nl) {
          const auto z = batch.z(r, n, k);
          put(line, static_cast<std::uint64_t>(k));
          line += ',';
          put(line, z.real());
          line += ',';
          put(line, z.imag());
        } else {
          line += ",,";
        }
        line += ',';
        if (k < nc) {
          put(line, static_cast<std::uint64_t>(k));
          line += ',';
          put(line, batch.companion(r, n, k));
        } else {
          line += ',';
        }
        line += ',';
        put(line, batch.replicas[r].population[static_cast<std::size_t>(n)]);
        line += '\n';
        out << line;
      }
    }
  }
}

nlohmann::json trajectory_sidecar(const TrajectoryBatch& batch, const std::string& model_spec,
                                  const nlohmann::json& model_json) {
  nlohmann::json j;
  j["schema_version"] = kTrajectorySchemaVersion;
  j["model_spec"] = model_spec;
  j["model"] = model_json;
  const auto& c = batch.config;
  nlohmann::json lambdas = nlohmann::json::array();
  for (const auto& l : c.lambdas) lambdas.push_back({l.theta, l.gamma});
  nlohmann::json m = nlohmann::json::array();
  for (const auto& v : batch.m_lambda) m.push_back({v.real(), v.imag()});
  j["config"] = {{"generations", c.generations},
                 {"replicas", c.replicas},
                 {"seed", c.seed},
                 {"max_population", c.max_population},
                 {"lambdas", lambdas},
                 {"companion_thetas", c.companion_thetas}};
  j["m_lambda"] = m;
  j["m_companion"] = batch.m_companion;
  return j;
}

TrajectoryBatch read_trajectory_csv(std::istream& in, const nlohmann::json* sidecar) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  struct Row {
    std::uint64_t replica, n, population;
    long lambda_index, companion_index;
    double re, im, comp;
  };
  std::vector<Row> rows;
  std::uint64_t max_rep = 0, max_n = 0;
  long max_l = -1, max_c = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kHeader) throw ConfigError("traj", "unexpected CSV header: " + line);
      header_seen = true;
      continue;
    }
    std::string_view fields[8];
    std::size_t start = 0, f = 0;
    for (std::size_t i = 0; i <= line.size() && f < 8; ++i) {
      if (i == line.size() || line[i] == ',') {
        fields[f++] = std::string_view(line).substr(start, i - start);
        start = i + 1;
      }
    }
    if (f != 8) throw ConfigError("traj", "expected 8 columns on line " + std::to_string(line_no));
    Row r{};
    r.replica = parse_field<std::uint64_t>(fields[0], line_no);
    r.n = parse_field<std::uint64_t>(fields[1], line_no);
    r.lambda_index = fields[2].empty() ? -1 : parse_field<long>(fields[2], line_no);
    if (r.lambda_index >= 0) {
      r.re = parse_field<double>(fields[3], line_no);
      r.im = parse_field<double>(fields[4], line_no);
    }
    r.companion_index = fields[5].empty() ? -1 : parse_field<long>(fields[5], line_no);
    if (r.companion_index >= 0) r.comp = parse_field<double>(fields[6], line_no);
    r.population = parse_field<std::uint64_t>(fields[7], line_no);
    max_rep = std::max(max_rep, r.replica);
    max_n = std::max(max_n, r.n);
    max_l = std::max(max_l, r.lambda_index);
    max_c = std::max(max_c, r.companion_index);
    rows.push_back(r);
  }
  if (!header_seen || rows.empty()) throw ConfigError("traj", "no trajectory rows");

  TrajectoryBatch b;
  b.config.generations = static_cast<int>(max_n);
  b.config.replicas = max_rep + 1;
  const auto nl = static_cast<std::size_t>(max_l + 1), nc = static_cast<std::size_t>(max_c + 1);
  b.config.lambdas.resize(nl);
  b.config.companion_thetas.resize(nc);
  if (sidecar) {
    const auto& c = sidecar->at("config");
    for (std::size_t j = 0; j < nl && j < c.at("lambdas").size(); ++j)
      b.config.lambdas[j] = {c.at("lambdas")[j][0].get<double>(), c.at("lambdas")[j][1].get<double>()};
    for (std::size_t j = 0; j < nc && j < c.at("companion_thetas").size(); ++j)
      b.config.companion_thetas[j] = c.at("companion_thetas")[j].get<double>();
    b.config.seed = c.value("seed", std::uint64_t{0});
    b.model_description = sidecar->value("model_spec", std::string{});
    for (const auto& m : sidecar->value("m_lambda", nlohmann::json::array()))
      b.m_lambda.emplace_back(m[0].get<double>(), m[1].get<double>());
    for (const auto& m : sidecar->value("m_companion", nlohmann::json::array())) b.m_companion.push_back(m.get<double>());
  }
  b.replicas.resize(b.config.replicas);
  for (std::size_t r = 0; r < b.replicas.size(); ++r) {
    auto& rep = b.replicas[r];
    rep.stream = r;
    rep.z.assign((max_n + 1) * nl, {0.0, 0.0});
    rep.companions.assign((max_n + 1) * nc, 0.0);
    rep.population.assign(max_n + 1, 0);
  }
  for (const auto& row : rows) {
    auto& rep = b.replicas[row.replica];
    rep.population[row.n] = row.population;
    if (row.lambda_index >= 0)
      rep.z[row.n * nl + static_cast<std::size_t>(row.lambda_index)] = {row.re, row.im};
    if (row.companion_index >= 0) rep.companions[row.n * nc + static_cast<std::size_t>(row.companion_index)] = row.comp;
  }
  for (auto& rep : b.replicas) {
    for (std::size_t n = 0; n <= max_n; ++n) {
      if (rep.population[n] == 0) {
        rep.extinct_at = static_cast<int>(n);
        break;
      }
    }
  }
  return b;
}

}  // namespace brw
