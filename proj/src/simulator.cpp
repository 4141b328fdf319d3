#include "brw/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "brw/compensated.hpp"
#include "brw/errors.hpp"
#include "brw/kernels/kernels.hpp"
#include "brw/laplace.hpp"

namespace brw {

namespace {

// m(lambda) for models without a closed form is estimated once, with a large
// fixed sample, so every replica normalises by the same constant.
constexpr std::uint64_t kNormalisationSamples = 1'000'000;

struct Workspace {
  std::vector<double> parents;
  std::vector<double> children;
  std::vector<std::uint64_t> counts;
  std::vector<std::complex<double>> sums;
  std::vector<double> real_sums;
  std::vector<double> child_re, child_im, parent_re, parent_im;
};

// Children are produced in chunks that stay in cache; an even chunk size keeps
// the random sequence identical to one whole-generation draw.
constexpr std::size_t kChunk = 4096;

std::uint64_t draw_counts(std::span<const double> parents, int next_n, const ReproductionModel& model,
                          RandomStream& rng, std::uint64_t cap, std::vector<std::uint64_t>& counts) {
  counts.resize(parents.size());
  model.sample_counts(rng, counts);
  std::uint64_t total = 0;
  for (auto c : counts) {
    if (c > cap || total > cap - c) {
      std::uint64_t shown = total;
      if (c > UINT64_MAX - shown) shown = UINT64_MAX; else shown += c;
      throw PopulationCapError(next_n, shown, cap);
    }
    total += c;
  }
  return total;
}

// Fills children with parent position + displacement, calling on_chunk(begin, end) after each chunk.
template <class OnChunk>
void place_children(std::span<const double> parents, std::span<const std::uint64_t> counts,
                    const ReproductionModel& model, RandomStream& rng, std::vector<double>& children,
                    OnChunk&& on_chunk) {
  std::size_t parent = 0;
  std::uint64_t left = parents.empty() ? 0 : counts[0];
  for (std::size_t begin = 0; begin < children.size(); begin += kChunk) {
    const std::size_t end = std::min(children.size(), begin + kChunk);
    model.sample_displacements(rng, std::span<double>(children.data() + begin, end - begin));
    for (std::size_t k = begin; k < end; ++k) {
      while (left == 0) left = counts[++parent];
      children[k] += parents[parent];
      --left;
    }
    on_chunk(begin, end);
  }
}

void branch(std::span<const double> parents, int next_n, const ReproductionModel& model, RandomStream& rng,
            std::uint64_t cap, std::vector<std::uint64_t>& counts, std::vector<double>& children) {
  children.resize(draw_counts(parents, next_n, model, rng, cap, counts));
  place_children(parents, counts, model, rng, children, [](std::size_t, std::size_t) {});
}

double increment_sum(std::span<const double> parents, std::span<const std::uint64_t> counts,
                     std::span<const double> children, ComplexParameter lambda, std::complex<double> inv_parent,
                     std::complex<double> inv_child, Workspace& ws) {
  const auto& k = kernels::active();
  ws.parent_re.resize(parents.size());
  ws.parent_im.resize(parents.size());
  ws.child_re.resize(children.size());
  ws.child_im.resize(children.size());
  k.complex_exp_terms(parents, lambda, ws.parent_re, ws.parent_im);
  k.complex_exp_terms(children, lambda, ws.child_re, ws.child_im);
  CompensatedSum total;
  std::size_t c = 0;
  for (std::size_t i = 0; i < parents.size(); ++i) {
    CompensatedComplexSum group;
    for (std::uint64_t j = 0; j < counts[i]; ++j, ++c) group.add({ws.child_re[c], ws.child_im[c]});
    const std::complex<double> diff =
        inv_child * group.value() - inv_parent * std::complex<double>(ws.parent_re[i], ws.parent_im[i]);
    total.add(std::norm(diff));
  }
  return total.value();
}

void run_replica(const ReproductionModel& model, const SimConfig& cfg, std::span<const std::complex<double>> m_lambda,
                 std::span<const double> m_comp, std::uint64_t index, ReplicaTrajectory& out, Workspace& ws) {
  const std::size_t nl = cfg.lambdas.size(), nc = cfg.companion_thetas.size();
  const auto n_gen = static_cast<std::size_t>(cfg.generations);
  out.stream = index;
  out.extinct_at = -1;
  out.z.assign((n_gen + 1) * nl, {0.0, 0.0});
  out.companions.assign((n_gen + 1) * nc, 0.0);
  out.population.assign(n_gen + 1, 0);
  out.quadratic_increments.assign(cfg.quadratic_increments ? n_gen * nl : 0, 0.0);

  for (std::size_t j = 0; j < nl; ++j) out.z[j] = {1.0, 0.0};
  for (std::size_t c = 0; c < nc; ++c) out.companions[c] = 1.0;
  out.population[0] = 1;

  RandomStream rng(cfg.seed, index);
  ws.parents.assign(1, 0.0);
  std::vector<std::complex<double>> inv_pow(nl, {1.0, 0.0});
  std::vector<double> inv_pow_c(nc, 1.0);
  ws.sums.resize(nl);
  ws.real_sums.resize(nc);
  const auto& k = kernels::active();

  std::vector<CompensatedComplexSum> acc(nl);
  std::vector<CompensatedSum> acc_c(nc);
  for (std::size_t n = 0; n < n_gen; ++n) {
    if (ws.parents.empty()) break;
    ws.children.resize(draw_counts(ws.parents, static_cast<int>(n + 1), model, rng, cfg.max_population, ws.counts));
    out.population[n + 1] = ws.children.size();
    std::fill(acc.begin(), acc.end(), CompensatedComplexSum{});
    std::fill(acc_c.begin(), acc_c.end(), CompensatedSum{});
    place_children(ws.parents, ws.counts, model, rng, ws.children, [&](std::size_t begin, std::size_t end) {
      const std::span<const double> chunk(ws.children.data() + begin, end - begin);
      k.complex_exp_sums(chunk, cfg.lambdas, ws.sums);
      for (std::size_t j = 0; j < nl; ++j) acc[j].add(ws.sums[j]);
      if (nc > 0) {
        k.real_exp_sums(chunk, cfg.companion_thetas, ws.real_sums);
        for (std::size_t c = 0; c < nc; ++c) acc_c[c].add(ws.real_sums[c]);
      }
    });

    if (cfg.quadratic_increments) {
      for (std::size_t j = 0; j < nl; ++j) {
        out.quadratic_increments[n * nl + j] = increment_sum(ws.parents, ws.counts, ws.children, cfg.lambdas[j],
                                                             inv_pow[j], inv_pow[j] / m_lambda[j], ws);
      }
    }
    for (std::size_t j = 0; j < nl; ++j) inv_pow[j] /= m_lambda[j];
    for (std::size_t c = 0; c < nc; ++c) inv_pow_c[c] /= m_comp[c];

    if (ws.children.empty()) {
      out.extinct_at = static_cast<int>(n + 1);
    } else {
      for (std::size_t j = 0; j < nl; ++j) out.z[(n + 1) * nl + j] = acc[j].value() * inv_pow[j];
      for (std::size_t c = 0; c < nc; ++c) out.companions[(n + 1) * nc + c] = acc_c[c].value() * inv_pow_c[c];
    }
    std::swap(ws.parents, ws.children);
  }
}

}  // namespace

Generation step_generation(const Generation& gen, const ReproductionModel& model, RandomStream& rng,
                           std::uint64_t max_population, std::vector<std::uint64_t>* counts) {
  Generation next;
  next.n = gen.n + 1;
  std::vector<std::uint64_t> local;
  branch(gen.positions, next.n, model, rng, max_population, counts ? *counts : local, next.positions);
  return next;
}

double quadratic_increment_sum(const Generation& parents, std::span<const std::uint64_t> counts,
                               const Generation& children, ComplexParameter lambda, std::complex<double> m_lambda) {
  if (counts.size() != parents.positions.size())
    throw PreconditionError("offspring counts must match the parent generation");
  Workspace ws;
  const std::complex<double> inv_parent = std::pow(m_lambda, -parents.n);
  return increment_sum(parents.positions, counts, children.positions, lambda, inv_parent, inv_parent / m_lambda, ws);
}

TrajectoryBatch simulate_trajectories(const ReproductionModel& model, const SimConfig& config) {
  if (config.generations < 1) throw ConfigError("generations", "must be at least 1");
  if (config.replicas < 1) throw ConfigError("replicas", "must be at least 1");
  if (config.max_population < 1) throw ConfigError("max_population", "must be at least 1");

  TrajectoryBatch batch;
  batch.config = config;
  batch.model_description = model.describe();
  const MonteCarloOptions mc{kNormalisationSamples, config.seed};
  for (const auto& lambda : config.lambdas) {
    const auto c = classify_case(model, lambda, kDefaultCaseTolerance, mc);
    if (c.label == CaseLabel::III)
      throw CaseThreeError("lambda = " + std::to_string(lambda.theta) + " + " + std::to_string(lambda.gamma) +
                           "i is Case III (m(lambda) = 0); Z_n(lambda) is undefined");
    batch.m_lambda.push_back(evaluate_m(model, lambda, mc).value);
  }
  for (double t : config.companion_thetas) {
    const double m = evaluate_m(model, {t, 0.0}, mc).value.real();
    if (!std::isfinite(m) || !(m > 0)) throw OutOfStripError("companion m(theta') is not finite and positive");
    batch.m_companion.push_back(m);
  }

  batch.replicas.resize(config.replicas);
  std::vector<std::exception_ptr> errors(config.replicas);
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    Workspace ws;
    for (;;) {
      // Every fetched index runs, so all replicas below a failure complete.
      if (failed.load()) return;
      const std::uint64_t r = next.fetch_add(1);
      if (r >= config.replicas) return;
      try {
        run_replica(model, config, batch.m_lambda, batch.m_companion, r, batch.replicas[r], ws);
      } catch (...) {
        errors[r] = std::current_exception();
        failed.store(true);
      }
    }
  };
  unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, config.replicas));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) {
    // Rethrow the lowest-index failure; replicas below it are complete, so
    // this is the same error a serial run reports.
    for (std::uint64_t r = 0; r < config.replicas; ++r) {
      if (errors[r]) std::rethrow_exception(errors[r]);
    }
  }
  return batch;
}

}  // namespace brw
