#pragma once

// Finite-difference verification of every differentiable component: message
// passing layers, relational/attention layers, pooling operators, readouts,
// and losses. Shared by the CLI `gradcheck` command and the acceptance tests.

#include <cstdint>
#include <string>
#include <vector>

namespace gdn {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

// Runs the full suite on small random fixtures seeded by `seed`.
std::vector<GradCheckEntry> run_grad_suite(std::uint64_t seed = 7);

// Largest error across the suite (convenience for pass/fail gating).
double grad_suite_worst(const std::vector<GradCheckEntry>& entries);

}  // namespace gdn
