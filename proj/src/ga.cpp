#include "shaken/ga.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <thread>

#include "shaken/error.hpp"

namespace shaken {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mt19937_64 member_stream(std::uint64_t seed, int generation, int member) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(generation), static_cast<std::uint32_t>(member)};
  return std::mt19937_64(seq);
}

double wrap_unit_phase(double phase) {
  double p = std::fmod(phase, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  if (p >= kTwoPi) p = 0.0;
  return p;
}

double mean_fitness(const Population& pop) {
  double acc = 0.0;
  for (const auto& ind : pop) acc += ind.fitness;
  return acc / static_cast<double>(pop.size());
}

std::vector<std::size_t> ranking(const Population& pop) {
  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pop[a].fitness < pop[b].fitness; });
  return order;
}

}  // namespace

void GaParams::validate() const {
  if (population_size < 4) throw ConfigError("population_size must be >= 4");
  if (elite_count < 0 || elite_count > population_size) throw ConfigError("elite_count must be in [0, population_size]");
  if (tournament_size < 1) throw ConfigError("tournament_size must be >= 1");
  if (generations < 0) throw ConfigError("generations must be >= 0");
  for (double r : {mutation_rate, crossover_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("GA rates must lie in [0, 1]");
  }
  if (!(alpha_max > 0.0)) throw ConfigError("alpha_max must be > 0");
  if (!(initial_alpha_max >= 0.0 && initial_alpha_max <= alpha_max)) {
    throw ConfigError("initial_alpha_max must lie in [0, alpha_max]");
  }
  if (!(mutation_sigma_amplitude >= 0.0) || !(mutation_sigma_phase >= 0.0)) {
    throw ConfigError("mutation sigmas must be >= 0");
  }
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (duration_wr < 0.0) throw ConfigError("duration must be >= 0");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

double GaParams::resolved_duration(const LatticeConfig& config) const {
  return duration_wr > 0.0 ? duration_wr : config.to_recoil_time(0.5e-3);
}

PropagationOptions GaParams::propagation_options() const {
  PropagationOptions o;
  o.dt = dt;
  o.grid_points = grid_points;
  return o;
}

ShakingWaveform decode(const Genome& genome, const FrequencySubspace& subspace, double duration) {
  if (genome.genes.size() != 2 * subspace.size()) {
    throw ConfigError("genome has " + std::to_string(genome.genes.size()) + " genes; subspace needs " +
                      std::to_string(2 * subspace.size()));
  }
  ShakingWaveform w;
  w.duration = duration;
  w.envelope = Envelope::smooth_window;
  for (std::size_t j = 0; j < subspace.size(); ++j) {
    w.components.push_back({subspace.frequencies[j].omega_wr, genome.amplitude(j), genome.phase(j)});
  }
  return w;
}

double fitness(const Genome& genome, const FitnessContext& context) {
  try {
    const ShakingWaveform w = decode(genome, context.subspace, context.duration);
    const MomentumState final_state = propagate_final(context.config, context.initial, w, context.options);
    const PopulationVector target = population_vector(make_split_state(context.target, std::max(context.target.order, 5)));
    return error_metric(population_vector(final_state), target);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error&) {
    return 100.0;
  }
}

Genome random_genome(std::size_t tones, const GaParams& params, int generation, int member) {
  auto rng = member_stream(params.rng_seed, generation, member);
  std::uniform_real_distribution<double> amp(0.0, params.initial_alpha_max);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  Genome g(tones);
  for (std::size_t j = 0; j < tones; ++j) {
    g.amplitude(j) = amp(rng);
    g.phase(j) = wrap_unit_phase(phase(rng));
  }
  return g;
}

Population initial_population(std::size_t tones, const GaParams& params) {
  params.validate();
  Population pop;
  pop.reserve(static_cast<std::size_t>(params.population_size));
  for (int i = 0; i < params.population_size; ++i) pop.push_back(Individual{random_genome(tones, params, 0, i)});
  return pop;
}

Population evolve(const Population& evaluated, const GaParams& params, int generation) {
  params.validate();
  if (evaluated.empty()) throw ConfigError("cannot evolve an empty population");
  for (const auto& ind : evaluated) {
    if (!ind.evaluated()) throw ConfigError("evolve needs a fully evaluated population");
  }
  const auto order = ranking(evaluated);
  const auto size = static_cast<std::size_t>(params.population_size);
  const auto elites = std::min(static_cast<std::size_t>(params.elite_count), evaluated.size());

  Population next;
  next.reserve(size);
  for (std::size_t e = 0; e < elites && next.size() < size; ++e) next.push_back(evaluated[order[e]]);

  for (auto member = static_cast<int>(next.size()); next.size() < size; ++member) {
    auto rng = member_stream(params.rng_seed, generation, member);
    std::uniform_int_distribution<std::size_t> pick(0, evaluated.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto tournament = [&]() -> const Individual& {
      std::size_t best = pick(rng);
      for (int t = 1; t < params.tournament_size; ++t) {
        const std::size_t c = pick(rng);
        if (evaluated[c].fitness < evaluated[best].fitness) best = c;
      }
      return evaluated[best];
    };
    const Individual& first = tournament();
    const Individual& second = tournament();

    Individual child = first;
    bool changed = false;
    if (unit(rng) < params.crossover_rate) {
      for (std::size_t g = 0; g < child.genome.genes.size(); ++g) {
        if (unit(rng) < 0.5 && child.genome.genes[g] != second.genome.genes[g]) {
          child.genome.genes[g] = second.genome.genes[g];
          changed = true;
        }
      }
    }
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t j = 0; j < child.genome.tone_count(); ++j) {
      if (unit(rng) < params.mutation_rate) {
        double& a = child.genome.amplitude(j);
        a = std::clamp(a + params.mutation_sigma_amplitude * noise(rng), 0.0, params.alpha_max);
        changed = true;
      }
      if (unit(rng) < params.mutation_rate) {
        double& p = child.genome.phase(j);
        p = wrap_unit_phase(p + params.mutation_sigma_phase * noise(rng));
        changed = true;
      }
    }
    if (changed) child.fitness = std::numeric_limits<double>::quiet_NaN();
    next.push_back(std::move(child));
  }
  return next;
}

void evaluate(Population& population, const FitnessContext& context, int jobs) {
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < population.size(); ++i) {
    if (!population[i].evaluated()) pending.push_back(i);
  }
  if (jobs <= 1 || pending.size() <= 1) {
    for (std::size_t i : pending) population[i].fitness = fitness(population[i].genome, context);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < pending.size(); k = next++) {
      population[pending[k]].fitness = fitness(population[pending[k]].genome, context);
    }
  };
  std::vector<std::jthread> threads;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(jobs), pending.size());
  for (std::size_t t = 0; t < count; ++t) threads.emplace_back(worker);
}

int OptimizationRun::first_generation_below(double pct) const {
  for (const auto& h : history) {
    if (h.best_error < pct) return h.generation;
  }
  return -1;
}

OptimizationProblem make_problem(SubspaceKind kind, const SplitTarget& target, const GaParams& params,
                                 const LatticeConfig& config) {
  return {config, build_subspace(config, kind, params.resolved_duration(config)), target, ground_state(config),
          params};
}

OptimizationRun optimize(const OptimizationProblem& problem) {
  const auto start = std::chrono::steady_clock::now();
  const GaParams& params = problem.params;
  params.validate();
  problem.config.validate();
  if (problem.subspace.size() == 0) throw ConfigError("empty frequency subspace");

  FitnessContext context{problem.config, problem.subspace, problem.target, problem.initial,
                         params.resolved_duration(problem.config), params.propagation_options()};

  OptimizationRun run;
  run.subspace = problem.subspace;
  run.target = problem.target;
  run.duration = context.duration;
  run.seed = params.rng_seed;

  Population pop = initial_population(problem.subspace.size(), params);
  evaluate(pop, context, params.jobs);
  auto record = [&](int generation) {
    const auto best = ranking(pop).front();
    run.history.push_back({generation, pop[best].fitness, mean_fitness(pop)});
    if (pop[best].fitness < run.best_error || generation == 0) {
      run.best_error = pop[best].fitness;
      run.best_genome = pop[best].genome;
    }
  };
  record(0);
  for (int g = 1; g <= params.generations; ++g) {
    if (params.stop_error_pct > 0.0 && run.best_error < params.stop_error_pct) break;
    pop = evolve(pop, params, g);
    evaluate(pop, context, params.jobs);
    record(g);
  }

  const ShakingWaveform best = decode(run.best_genome, problem.subspace, context.duration);
  PropagationOptions traj_options = context.options;
  traj_options.sample_stride = 10;
  run.best_trajectory = propagate(problem.config, problem.initial, best, problem.target, traj_options);
  try {
    run.final_theta = extract_relative_phase(run.best_trajectory.final_state, problem.target.order);
  } catch (const PhaseUndefinedError&) {
  }
  PropagationOptions fine = context.options;
  fine.dt = kDefaultTimeStep;
  const PopulationVector target = population_vector(make_split_state(problem.target, std::max(problem.target.order, 5)));
  run.verified_error = error_metric(population_vector(propagate_final(problem.config, problem.initial, best, fine)), target);
  run.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

OptimizationRun optimize(SubspaceKind kind, const SplitTarget& target, const GaParams& params,
                         const LatticeConfig& config) {
  return optimize(make_problem(kind, target, params, config));
}

RestartSummary multi_restart(int k, const OptimizationProblem& problem) {
  if (k < 1) throw ConfigError("multi_restart needs k >= 1");
  RestartSummary out;
  for (int i = 0; i < k; ++i) {
    OptimizationProblem p = problem;
    p.params.rng_seed = problem.params.rng_seed + static_cast<std::uint64_t>(i);
    out.runs.push_back(optimize(p));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < out.runs.size(); ++i) {
    sum += out.runs[i].best_error;
    if (out.runs[i].best_error < out.runs[out.best_index].best_error) out.best_index = i;
  }
  out.mean_error = sum / k;
  double var = 0.0;
  for (const auto& r : out.runs) var += (r.best_error - out.mean_error) * (r.best_error - out.mean_error);
  out.variance_error = var / k;
  return out;
}

OptimizationProblem make_staged_problem(const GaParams& params, const LatticeConfig& config, double theta_initial) {
  OptimizationProblem p = make_problem(SubspaceKind::select, {3, 0.0}, params, config);
  p.initial = make_split_state({2, theta_initial}, kPropagationCutoff);
  return p;
}

OptimizationRun staged_split(const GaParams& params, const LatticeConfig& config, double theta_initial) {
  return optimize(make_staged_problem(params, config, theta_initial));
}

}  // namespace shaken
