#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lace/grad_check.hpp"

namespace lace {

inline constexpr double kGradCheckTolerance = 1e-4;

struct GradCheckReport {
  std::string component;
  GradCheckResult result;
  double seconds = 0.0;
  bool passed() const { return result.max_rel_error < kGradCheckTolerance; }
};

// Finite-difference checks of (a) one LSTM cell, (b) a 2-layer BiLSTM over
// 4 tokens, (c) a 2-head GAT layer on 4 relations and (d) the full model
// loss on a 2-document synthetic fixture (d_w 8, d_t 4, d_h 8,
// d_rel = d_head = 16). Every scalar is a fixed random weighting of the
// component output.
std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t seed = 7);

}  // namespace lace
