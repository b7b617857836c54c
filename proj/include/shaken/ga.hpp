#pragma once

// Genetic search over multi-tone shaking waveforms restricted to a frequency
// subspace, minimizing the population-vector error against a split target.

#include <cstdint>
#include <limits>
#include <vector>

#include "shaken/analytics.hpp"
#include "shaken/propagator.hpp"

namespace shaken {

// Interleaved (amplitude, phase) per subspace tone.
struct Genome {
  std::vector<double> genes;

  Genome() = default;
  explicit Genome(std::size_t tones) : genes(2 * tones, 0.0) {}

  std::size_t tone_count() const { return genes.size() / 2; }
  double amplitude(std::size_t j) const { return genes.at(2 * j); }
  double phase(std::size_t j) const { return genes.at(2 * j + 1); }
  double& amplitude(std::size_t j) { return genes.at(2 * j); }
  double& phase(std::size_t j) { return genes.at(2 * j + 1); }

  bool operator==(const Genome&) const = default;
};

struct GaParams {
  int population_size = 40;
  int generations = 1000;
  int elite_count = 2;
  int tournament_size = 3;
  double mutation_rate = 0.15;
  double mutation_sigma_amplitude = 0.1;  // rad
  double mutation_sigma_phase = 0.3;      // rad
  double crossover_rate = 0.8;
  double alpha_max = 3.0;  // rad
  // Upper bound of amplitudes in the random initial population.
  double initial_alpha_max = 0.5;
  std::uint64_t rng_seed = 1;

  double duration_wr = 0.0;  // shaking time in 1/omega_R; 0 selects 0.5 ms
  double dt = 5e-3;
  int grid_points = kDefaultGridPoints;
  // Stop once the best error drops below this many percent; 0 never stops.
  double stop_error_pct = 0.0;
  int jobs = 1;

  void validate() const;
  double resolved_duration(const LatticeConfig& config) const;
  PropagationOptions propagation_options() const;
};

struct Individual {
  Genome genome;
  double fitness = std::numeric_limits<double>::quiet_NaN();  // percent error
  bool evaluated() const { return fitness == fitness; }
};

using Population = std::vector<Individual>;

// Enveloped sum of subspace tones.
ShakingWaveform decode(const Genome& genome, const FrequencySubspace& subspace, double duration);

struct FitnessContext {
  LatticeConfig config;
  FrequencySubspace subspace;
  SplitTarget target;
  MomentumState initial{Eigen::VectorXcd::Ones(1), 0.0};
  double duration = 0.0;
  PropagationOptions options;
};

// Final-time error in percent; propagation failures score 100.
double fitness(const Genome& genome, const FitnessContext& context);

// Uniformly random genome within bounds, drawn from the stream for
// (seed, generation, member).
Genome random_genome(std::size_t tones, const GaParams& params, int generation, int member);

Population initial_population(std::size_t tones, const GaParams& params);

// Elites first (by rank), then tournament-selected, uniformly crossed and
// Gaussian-mutated children. Children identical to their first parent keep
// its fitness; every other child is left unevaluated.
Population evolve(const Population& evaluated, const GaParams& params, int generation);

// Evaluates members lacking a fitness, in parallel when params.jobs > 1.
void evaluate(Population& population, const FitnessContext& context, int jobs);

struct GenerationStats {
  int generation;
  double best_error;
  double mean_error;
};

struct OptimizationProblem {
  LatticeConfig config;
  FrequencySubspace subspace;
  SplitTarget target;
  MomentumState initial{Eigen::VectorXcd::Ones(1), 0.0};
  GaParams params;
};

struct OptimizationRun {
  std::vector<GenerationStats> history;
  Genome best_genome;
  double best_error = 100.0;
  // Best genome re-propagated at the default fine time step.
  double verified_error = 100.0;
  Trajectory best_trajectory;
  double final_theta = std::numeric_limits<double>::quiet_NaN();
  FrequencySubspace subspace;
  SplitTarget target;
  double duration = 0.0;
  std::uint64_t seed = 0;
  double wall_clock_s = 0.0;

  // First generation whose best error is below `pct`; -1 when never.
  int first_generation_below(double pct) const;
};

// Ground Bloch state target problem for the given subspace class.
OptimizationProblem make_problem(SubspaceKind kind, const SplitTarget& target, const GaParams& params,
                                 const LatticeConfig& config);

OptimizationRun optimize(const OptimizationProblem& problem);
OptimizationRun optimize(SubspaceKind kind, const SplitTarget& target, const GaParams& params,
                         const LatticeConfig& config);

struct RestartSummary {
  std::vector<OptimizationRun> runs;
  std::size_t best_index = 0;
  double mean_error = 0.0;
  double variance_error = 0.0;

  const OptimizationRun& best() const { return runs.at(best_index); }
};

// k independent runs with seeds rng_seed, rng_seed + 1, ...
RestartSummary multi_restart(int k, const OptimizationProblem& problem);

// Transfer from split(2, theta_initial) to split(3) on the select subspace.
OptimizationProblem make_staged_problem(const GaParams& params, const LatticeConfig& config,
                                        double theta_initial = 0.0);
OptimizationRun staged_split(const GaParams& params, const LatticeConfig& config, double theta_initial = 0.0);

}  // namespace shaken
