#pragma once

#include <cstdint>

#include "acsim/graph.hpp"

namespace acsim {

struct GenConfig {
  std::size_t num_attack_steps = 20;  // >= 20 and a multiple of 20
  std::uint64_t seed = 0;
  double ttc_min = 1.0;
  double ttc_max = 10.0;
  double and_fraction = 0.25;       // chance a two-parent step becomes AND
  double extra_parent_prob = 0.3;   // chance of a second parent

  void check() const;  // throws InputError
};

/// Semi-random attachment generator.
///
/// Steps are created in sequence; step k hangs off one uniformly chosen
/// earlier step and, with probability extra_parent_prob, a second distinct
/// earlier step. Two-parent steps are AND with probability and_fraction.
/// The num_attack_steps/20 deepest steps (longest path from the entry, ties
/// broken by id) become flags, each guarded by its own defense step.
AttackGraph generate_graph(const GenConfig& config);

}  // namespace acsim
