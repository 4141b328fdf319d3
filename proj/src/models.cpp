#include "brw/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "brw/compensated.hpp"
#include "brw/errors.hpp"
#include "brw/kernels/kernels.hpp"

namespace brw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& name, const std::string& what) {
  if (!ok) throw ConfigError(name, what);
}

// Normalised Fejer density (1 - cos x) / (pi x^2), written to avoid
// cancellation near 0.
double fejer_kernel(double x) {
  if (std::abs(x) < 1e-4) return (0.5 - x * x / 24.0);
  const double s = std::sin(0.5 * x);
  return 2.0 * s * s / (x * x);
}

// G(x) = int_0^x (1 - cos t)/t^2 dt on a uniform grid, so that the CDF is
// F(x) = 1/2 + G(x)/pi for x >= 0. Beyond the grid the tail
// pi/2 - G(x) = 1/x + sin x/x^2 - 2 cos x/x^3 - 6 sin x/x^4 + O(x^-5) is used.
class FejerTable {
 public:
  static constexpr double kStep = 0.005;
  static constexpr double kMax = 200.0;

  FejerTable() {
    static constexpr std::array<double, 4> gx = {0.1834346424956498, 0.5255324099163290,
                                                 0.7966664774136267, 0.9602898564975363};
    static constexpr std::array<double, 4> gw = {0.3626837833783620, 0.3137066458778873,
                                                 0.2223810344533745, 0.1012285362903763};
    const auto cells = static_cast<std::size_t>(std::lround(kMax / kStep));
    g_.resize(cells + 1);
    f_.resize(cells + 1);
    CompensatedSum acc;
    g_[0] = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      const double lo = static_cast<double>(i) * kStep;
      const double mid = lo + 0.5 * kStep;
      double cell = 0.0;
      for (std::size_t k = 0; k < gx.size(); ++k) {
        const double dx = 0.5 * kStep * gx[k];
        cell += gw[k] * (fejer_kernel(mid - dx) + fejer_kernel(mid + dx));
      }
      acc.add(0.5 * kStep * cell);
      g_[i + 1] = acc.value();
    }
    for (std::size_t i = 0; i <= cells; ++i) f_[i] = fejer_kernel(static_cast<double>(i) * kStep);
  }

  static double tail(double x) {
    const double s = std::sin(x), c = std::cos(x);
    const double ix = 1.0 / x;
    return ix + ix * ix * (s - ix * (2.0 * c + 6.0 * s * ix));
  }

  // Solves G(x) = target for x >= 0, target in [0, pi/2).
  double invert(double target) const {
    const double at_max = g_.back();
    if (target >= at_max) return invert_tail(0.5 * kPi - target);
    const auto it = std::upper_bound(g_.begin(), g_.end(), target);
    const auto i = static_cast<std::size_t>(std::distance(g_.begin(), it) - 1);
    // Cubic Hermite interpolant of G on the cell, inverted by safeguarded Newton.
    const double h = kStep;
    const double g0 = g_[i], g1 = g_[i + 1], d0 = f_[i] * h, d1 = f_[i + 1] * h;
    auto eval = [&](double t, double& val, double& der) {
      const double t2 = t * t, t3 = t2 * t;
      val = (2 * t3 - 3 * t2 + 1) * g0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * g1 + (t3 - t2) * d1;
      der = (6 * t2 - 6 * t) * g0 + (3 * t2 - 4 * t + 1) * d0 + (-6 * t2 + 6 * t) * g1 + (3 * t2 - 2 * t) * d1;
    };
    double lo = 0.0, hi = 1.0;
    double t = g1 > g0 ? (target - g0) / (g1 - g0) : 0.5;
    for (int iter = 0; iter < 60; ++iter) {
      double val, der;
      eval(t, val, der);
      const double r = val - target;
      if (r > 0) hi = t; else lo = t;
      double next = der > 0 ? t - r / der : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) < 1e-15) {
        t = next;
        break;
      }
      t = next;
    }
    return (static_cast<double>(i) + t) * h;
  }

 private:
  static double invert_tail(double tau) {
    if (tau <= 0.0) return std::numeric_limits<double>::max();
    double lo = kMax, hi = std::max(2.0 * kMax, 4.0 / tau);
    while (tail(hi) > tau) hi *= 2.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-12 * hi; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (tail(mid) > tau) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  std::vector<double> g_;
  std::vector<double> f_;
};

const FejerTable& fejer_table() {
  static const FejerTable table;
  return table;
}

// Devroye's rejection sampler for P{J = k} proportional to k^-s, s > 1.
std::uint64_t sample_zeta(RandomStream& rng, double s) {
  const double b = std::exp2(s - 1.0);
  const double cap = 1e18;
  for (;;) {
    const double u = rng.uniform_positive();
    const double v = rng.uniform();
    const double x = std::floor(std::pow(u, -1.0 / (s - 1.0)));
    if (!(x < cap)) return static_cast<std::uint64_t>(cap);
    const double t = std::pow(1.0 + 1.0 / x, s - 1.0);
    if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::uint64_t>(x);
  }
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::vector<double> build_poisson_cdf(double mu) {
  std::vector<double> cdf;
  if (mu > 40.0) return cdf;
  double pmf = std::exp(-mu);
  CompensatedSum acc;
  for (std::uint64_t k = 0;; ++k) {
    acc.add(pmf);
    cdf.push_back(acc.value());
    if (static_cast<double>(k) > mu && pmf < 1e-18) break;
    pmf *= mu / static_cast<double>(k + 1);
  }
  cdf.back() = 1.0;
  return cdf;
}

thread_local std::vector<std::uint64_t> tl_bits;

constexpr std::size_t kPoissonGuideSize = 256;

}  // namespace

double LogPowerNorming::operator()(double t) const { return std::pow(1.0 + std::log(std::max(t, 1.0)), power); }

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::poisson_gaussian: return "poisson_gaussian";
    case ModelKind::binary_uniform: return "binary_uniform";
    case ModelKind::discrete_pareto_count: return "discrete_pareto_count";
    case ModelKind::lattice_deterministic: return "lattice_deterministic";
    case ModelKind::case3_poisson: return "case3_poisson";
    case ModelKind::compound: return "compound";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::poisson_gaussian, ModelKind::binary_uniform, ModelKind::discrete_pareto_count,
                 ModelKind::lattice_deterministic, ModelKind::case3_poisson, ModelKind::compound}) {
    if (model_kind_name(k) == name) return k;
  }
  throw ConfigError("kind", "unknown model family '" + std::string(name) + "'");
}

std::string_view finiteness_name(Finiteness f) {
  switch (f) {
    case Finiteness::finite: return "finite";
    case Finiteness::infinite: return "infinite";
    case Finiteness::unknown: return "unknown";
  }
  return "unknown";
}

double CountLaw::mean() const {
  switch (kind) {
    case Kind::poisson: return mu;
    case Kind::fixed: return static_cast<double>(k);
    case Kind::zeta: return std::riemann_zeta(alpha) / std::riemann_zeta(alpha + 1.0);
  }
  return kInf;
}

double CountLaw::factorial_moment2() const {
  switch (kind) {
    case Kind::poisson: return mu * mu;
    case Kind::fixed: return static_cast<double>(k) * static_cast<double>(k - 1);
    case Kind::zeta: return alpha > 2.0 ? (std::riemann_zeta(alpha - 1.0) - std::riemann_zeta(alpha)) /
                                              std::riemann_zeta(alpha + 1.0)
                                        : kInf;
  }
  return kInf;
}

std::complex<double> DisplacementLaw::laplace(ComplexParameter lambda) const {
  const std::complex<double> z = lambda.value();
  switch (kind) {
    case Kind::gaussian: return std::exp(-z * mean + 0.5 * sigma * sigma * z * z);
    case Kind::uniform: {
      const std::complex<double> w = z * a;
      if (std::abs(w) < 1e-4) {
        const std::complex<double> w2 = w * w;
        return 1.0 + w2 / 6.0 + w2 * w2 / 120.0;
      }
      return std::sinh(w) / w;
    }
    case Kind::point: return std::exp(-z * d);
    case Kind::two_point: return prob0 * std::exp(-z * x0) + (1.0 - prob0) * std::exp(-z * x1);
    case Kind::fejer:
      if (lambda.theta != tilt) return {kInf, 0.0};
      return {std::max(0.0, 1.0 - std::abs(lambda.gamma)), 0.0};
  }
  return {kInf, 0.0};
}

std::optional<double> DisplacementLaw::tilted_mean(double theta) const {
  switch (kind) {
    case Kind::gaussian: return (mean - sigma * sigma * theta) * laplace({theta, 0.0}).real();
    case Kind::uniform: {
      // -dL/dtheta with L = sinh(u)/u, u = theta a.
      const double u = theta * a;
      const double dl = std::abs(u) < 1e-4 ? u / 3.0 + u * u * u / 30.0
                                           : (u * std::cosh(u) - std::sinh(u)) / (u * u);
      return -a * dl;
    }
    case Kind::point: return d * std::exp(-theta * d);
    case Kind::two_point:
      return prob0 * x0 * std::exp(-theta * x0) + (1.0 - prob0) * x1 * std::exp(-theta * x1);
    case Kind::fejer: return std::nullopt;
  }
  return std::nullopt;
}

ReproductionModel::ReproductionModel(ModelKind kind, CountLaw count, DisplacementLaw displacement,
                                     std::map<std::string, double> params)
    : kind_(kind), count_(count), displacement_(displacement), params_(std::move(params)) {
  if (count_.kind == CountLaw::Kind::poisson) {
    poisson_cdf_ = build_poisson_cdf(count_.mu);
    if (!poisson_cdf_.empty()) {
      poisson_guide_.resize(kPoissonGuideSize);
      std::size_t j = 0;
      for (std::size_t i = 0; i < kPoissonGuideSize; ++i) {
        const double level = static_cast<double>(i) / kPoissonGuideSize;
        while (poisson_cdf_[j] <= level) ++j;
        poisson_guide_[i] = static_cast<std::uint32_t>(j);
      }
    }
  }
  if (count_.kind == CountLaw::Kind::zeta) metadata_.tail_index = count_.alpha;
}

ReproductionModel ReproductionModel::poisson_gaussian(double mu, double sigma) {
  return from_params(ModelKind::poisson_gaussian, {{"mu", mu}, {"sigma", sigma}});
}
ReproductionModel ReproductionModel::binary_uniform(double a) {
  return from_params(ModelKind::binary_uniform, {{"a", a}});
}
ReproductionModel ReproductionModel::discrete_pareto_count(double alpha, double sigma) {
  return from_params(ModelKind::discrete_pareto_count, {{"alpha", alpha}, {"sigma", sigma}});
}
ReproductionModel ReproductionModel::lattice_deterministic(double d, std::uint64_t children) {
  return from_params(ModelKind::lattice_deterministic, {{"d", d}, {"children", static_cast<double>(children)}});
}
ReproductionModel ReproductionModel::case3_poisson(double theta0) {
  return from_params(ModelKind::case3_poisson, {{"theta0", theta0}});
}

ReproductionModel ReproductionModel::compound(CountLaw count, DisplacementLaw displacement) {
  switch (count.kind) {
    case CountLaw::Kind::poisson: require(std::isfinite(count.mu) && count.mu > 0, "count.mu", "must be positive"); break;
    case CountLaw::Kind::fixed: require(count.k >= 1, "count.k", "must be at least 1"); break;
    case CountLaw::Kind::zeta: require(std::isfinite(count.alpha) && count.alpha > 1.0, "count.alpha", "must exceed 1"); break;
  }
  require(count.mean() > 1.0, "count", "mean offspring count must exceed 1 (supercritical)");
  switch (displacement.kind) {
    case DisplacementLaw::Kind::gaussian:
      require(std::isfinite(displacement.mean), "displacement.mean", "must be finite");
      require(std::isfinite(displacement.sigma) && displacement.sigma > 0, "displacement.sigma", "must be positive");
      break;
    case DisplacementLaw::Kind::uniform:
      require(std::isfinite(displacement.a) && displacement.a > 0, "displacement.a", "must be positive");
      break;
    case DisplacementLaw::Kind::point:
      require(std::isfinite(displacement.d), "displacement.d", "must be finite");
      break;
    case DisplacementLaw::Kind::two_point:
      require(std::isfinite(displacement.x0) && std::isfinite(displacement.x1), "displacement.x0", "must be finite");
      require(displacement.prob0 >= 0 && displacement.prob0 <= 1, "displacement.prob0", "must lie in [0, 1]");
      break;
    case DisplacementLaw::Kind::fejer:
      require(std::isfinite(displacement.tilt), "displacement.tilt", "must be finite");
      break;
  }
  return ReproductionModel(ModelKind::compound, count, displacement, {});
}

ReproductionModel ReproductionModel::from_params(ModelKind kind, const std::map<std::string, double>& given) {
  std::map<std::string, double> p;
  switch (kind) {
    case ModelKind::poisson_gaussian: p = {{"mu", 2.0}, {"sigma", 1.0}}; break;
    case ModelKind::binary_uniform: p = {{"a", 1.0}}; break;
    case ModelKind::discrete_pareto_count: p = {{"alpha", 1.5}, {"sigma", 1.0}}; break;
    case ModelKind::lattice_deterministic: p = {{"d", 2.0 * kPi}, {"children", 2.0}}; break;
    case ModelKind::case3_poisson: p = {{"theta0", 0.0}}; break;
    case ModelKind::compound:
      throw ConfigError("kind", "compound models are built from count/displacement objects");
  }
  for (const auto& [name, value] : given) {
    if (!p.contains(name)) throw ConfigError(name, "not a parameter of " + std::string(model_kind_name(kind)));
    require(std::isfinite(value), name, "must be finite");
    p[name] = value;
  }

  CountLaw count;
  DisplacementLaw disp;
  switch (kind) {
    case ModelKind::poisson_gaussian:
      require(p["mu"] > 0, "mu", "must be positive");
      require(p["mu"] > 1, "mu", "must exceed 1 (supercritical)");
      require(p["sigma"] > 0, "sigma", "must be positive");
      count = {.kind = CountLaw::Kind::poisson, .mu = p["mu"]};
      disp = {.kind = DisplacementLaw::Kind::gaussian, .mean = 0.0, .sigma = p["sigma"]};
      break;
    case ModelKind::binary_uniform:
      require(p["a"] > 0, "a", "must be positive");
      count = {.kind = CountLaw::Kind::fixed, .k = 2};
      disp = {.kind = DisplacementLaw::Kind::uniform, .a = p["a"]};
      break;
    case ModelKind::discrete_pareto_count:
      require(p["alpha"] > 1 && p["alpha"] < 2, "alpha", "must lie in (1, 2)");
      require(p["sigma"] > 0, "sigma", "must be positive");
      count = {.kind = CountLaw::Kind::zeta, .alpha = p["alpha"]};
      disp = {.kind = DisplacementLaw::Kind::gaussian, .mean = 0.0, .sigma = p["sigma"]};
      break;
    case ModelKind::lattice_deterministic: {
      const double c = p["children"];
      require(c >= 2 && c == std::floor(c) && c < 1e9, "children", "must be an integer >= 2");
      count = {.kind = CountLaw::Kind::fixed, .k = static_cast<std::uint64_t>(c)};
      disp = {.kind = DisplacementLaw::Kind::point, .d = p["d"]};
      break;
    }
    case ModelKind::case3_poisson:
      count = {.kind = CountLaw::Kind::poisson, .mu = 2.0};
      disp = {.kind = DisplacementLaw::Kind::fejer, .tilt = p["theta0"]};
      break;
    case ModelKind::compound: break;
  }
  return ReproductionModel(kind, count, disp, std::move(p));
}

double ReproductionModel::mean_offspring() const {
  if (displacement_.kind == DisplacementLaw::Kind::fejer && displacement_.tilt != 0.0) return kInf;
  return count_.mean();
}

std::optional<std::complex<double>> ReproductionModel::laplace_analytic(ComplexParameter lambda) const {
  if (!metadata_.has_analytic_laplace) return std::nullopt;
  const std::complex<double> l = displacement_.laplace(lambda);
  if (!std::isfinite(l.real())) return std::complex<double>{kInf, 0.0};
  return count_.mean() * l;
}

std::optional<double> ReproductionModel::tilted_mean_analytic(double theta) const {
  if (!metadata_.has_analytic_laplace) return std::nullopt;
  const auto t = displacement_.tilted_mean(theta);
  if (!t) return std::nullopt;
  return count_.mean() * *t;
}

std::optional<double> ReproductionModel::z1_second_moment(ComplexParameter lambda) const {
  if (!metadata_.has_analytic_laplace) return std::nullopt;
  const double l2 = displacement_.laplace({2.0 * lambda.theta, 0.0}).real();
  const std::complex<double> l = displacement_.laplace(lambda);
  if (!std::isfinite(l2) || !std::isfinite(l.real())) return std::nullopt;
  const double ml = std::norm(count_.mean() * l);
  if (ml == 0.0) return std::nullopt;
  const double cross = std::norm(l) == 0.0 ? 0.0 : count_.factorial_moment2() * std::norm(l);
  return (count_.mean() * l2 + cross) / ml;
}

Finiteness ReproductionModel::family_finiteness(MomentQuantity quantity, double order, double theta) const {
  const bool fejer = displacement_.kind == DisplacementLaw::Kind::fejer;
  if (fejer && theta != displacement_.tilt) return Finiteness::unknown;
  if (fejer && displacement_.tilt != 0.0 && quantity != MomentQuantity::complex_martingale) return Finiteness::unknown;
  if (order <= 1.0 || quantity == MomentQuantity::xlogx) return Finiteness::finite;
  if (count_.kind != CountLaw::Kind::zeta) return Finiteness::finite;
  if (order < count_.alpha) return Finiteness::finite;
  // Count-dominated tail: sum_i e^{-lambda X_i} ~ J L(lambda) unless L vanishes.
  if (quantity == MomentQuantity::real_martingale) return Finiteness::infinite;
  const bool nonvanishing = displacement_.kind == DisplacementLaw::Kind::gaussian ||
                            displacement_.kind == DisplacementLaw::Kind::point;
  return nonvanishing ? Finiteness::infinite : Finiteness::unknown;
}

Finiteness ReproductionModel::declared_finiteness(MomentQuantity quantity, double order, double theta) const {
  if (!(order > 0.0)) throw PreconditionError("moment order must be positive");
  for (const auto& o : metadata_.moments) {
    if (o.quantity == quantity && order >= o.order_lo && order <= o.order_hi && theta >= o.theta_lo &&
        theta <= o.theta_hi)
      return o.status;
  }
  if (quantity == MomentQuantity::xlogx && theta == 0.0) {
    return metadata_.xlogx_finite ? Finiteness::finite : Finiteness::infinite;
  }
  if (!metadata_.family_moments) return metadata_.moment_default;
  return family_finiteness(quantity, order, theta);
}

void ReproductionModel::sample_counts(RandomStream& rng, std::span<std::uint64_t> counts) const {
  switch (count_.kind) {
    case CountLaw::Kind::fixed: std::fill(counts.begin(), counts.end(), count_.k); return;
    case CountLaw::Kind::zeta:
      for (auto& c : counts) c = sample_zeta(rng, count_.alpha + 1.0);
      return;
    case CountLaw::Kind::poisson:
      if (poisson_cdf_.empty()) {
        std::poisson_distribution<std::uint64_t> dist(count_.mu);
        for (auto& c : counts) c = dist(rng);
        return;
      }
      // Guide-table inversion: same result as upper_bound over the CDF.
      for (auto& c : counts) {
        const double u = rng.uniform();
        std::size_t j = poisson_guide_[static_cast<std::size_t>(u * kPoissonGuideSize)];
        while (poisson_cdf_[j] <= u) ++j;
        c = j;
      }
      return;
  }
}

void ReproductionModel::sample_displacements(RandomStream& rng, std::span<double> out) const {
  const std::size_t n = out.size();
  if (n == 0) return;
  switch (displacement_.kind) {
    case DisplacementLaw::Kind::gaussian: {
      tl_bits.resize(2 * ((n + 1) / 2));
      rng.fill(tl_bits);
      kernels::active().gaussian_from_bits(tl_bits, out);
      const double mu = displacement_.mean, sigma = displacement_.sigma;
      if (mu != 0.0 || sigma != 1.0)
        for (auto& x : out) x = mu + sigma * x;
      return;
    }
    case DisplacementLaw::Kind::uniform:
      for (auto& x : out) x = displacement_.a * (2.0 * rng.uniform() - 1.0);
      return;
    case DisplacementLaw::Kind::point: std::fill(out.begin(), out.end(), displacement_.d); return;
    case DisplacementLaw::Kind::two_point:
      for (auto& x : out) x = rng.uniform() < displacement_.prob0 ? displacement_.x0 : displacement_.x1;
      return;
    case DisplacementLaw::Kind::fejer: {
      if (displacement_.tilt != 0.0)
        throw ConfigError("theta0", "sampling is supported only for theta0 = 0");
      const FejerTable& table = fejer_table();
      for (auto& x : out) {
        const double u = rng.uniform();
        x = u < 0.5 ? -table.invert(kPi * (0.5 - u)) : table.invert(kPi * (u - 0.5));
      }
      return;
    }
  }
}

OffspringSample ReproductionModel::sample_offspring(RandomStream& rng) const {
  std::uint64_t count = 0;
  sample_counts(rng, std::span(&count, 1));
  OffspringSample s;
  s.displacements.resize(count);
  sample_displacements(rng, s.displacements);
  return s;
}

std::string ReproductionModel::describe() const {
  std::ostringstream os;
  if (kind_ != ModelKind::compound) {
    os << "builtin:" << model_kind_name(kind_) << "(";
    bool first = true;
    for (const auto& [k, v] : params_) {
      os << (first ? "" : ",") << k << "=" << format_number(v);
      first = false;
    }
    os << ")";
    return os.str();
  }
  os << "compound(count=";
  switch (count_.kind) {
    case CountLaw::Kind::poisson: os << "poisson(mu=" << format_number(count_.mu) << ")"; break;
    case CountLaw::Kind::fixed: os << "fixed(k=" << count_.k << ")"; break;
    case CountLaw::Kind::zeta: os << "zeta(alpha=" << format_number(count_.alpha) << ")"; break;
  }
  os << ",displacement=";
  const auto& d = displacement_;
  switch (d.kind) {
    case DisplacementLaw::Kind::gaussian:
      os << "gaussian(mean=" << format_number(d.mean) << ",sigma=" << format_number(d.sigma) << ")";
      break;
    case DisplacementLaw::Kind::uniform: os << "uniform(a=" << format_number(d.a) << ")"; break;
    case DisplacementLaw::Kind::point: os << "point(d=" << format_number(d.d) << ")"; break;
    case DisplacementLaw::Kind::two_point:
      os << "two_point(x0=" << format_number(d.x0) << ",x1=" << format_number(d.x1)
         << ",prob0=" << format_number(d.prob0) << ")";
      break;
    case DisplacementLaw::Kind::fejer: os << "fejer(tilt=" << format_number(d.tilt) << ")"; break;
  }
  os << ")";
  return os.str();
}

}  // namespace brw
