// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "pc/config.hpp"
#include "pc/types.hpp"

namespace pc {

struct DemoRatios {
  double tau_dems = 0.0;  // retention fraction for this demonstration
  double tau_o = 0.0;     // share of the retained budget spent on the contrast channel
  bool operator==(const DemoRatios&) const = default;
};

/// Ratios for one job. `per_demo` is aligned with the retained demonstration
/// order, so per_demo[r] belongs to the demonstration of rank r.
struct AllocationPlan {
  double tau_dems = 0.0;
  std::vector<DemoRatios> per_demo;
  double tau_ins = 0.0;
  double tau_q = 0.0;
  double tau_o = 0.0;
};

inline double clamp_unit(double v) { return std::max(std::min(1.0, v), 0.0); }

/// 1 - 2·rank/N_d: +1 for the top rank, 0 at the midpoint.
inline double slope_term(std::size_t rank, std::size_t n_demos) {
  return 1.0 - 2.0 * static_cast<double>(rank) / static_cast<double>(n_demos);
}

/// Unclamped base retention fraction for the retained demonstrations:
/// whatever the μ·τ·L budget leaves after the instruction and question take
/// their shares, divided by the retained demonstration length. With
/// `eq8_literal` the complement (the deletion share) is returned instead.
inline double base_demo_ratio_raw(std::size_t total_tokens, std::size_t retained_demo_tokens,
                                  std::size_t instruction_tokens, std::size_t question_tokens,
                                  const CompressionConfig& config) {
  if (retained_demo_tokens == 0) throw Error(ErrorCode::EmptyDemos, "retained demonstrations have no tokens");
  const double budget = config.mu * config.tau * static_cast<double>(total_tokens) -
                        config.tau_ins * static_cast<double>(instruction_tokens) -
                        config.tau_q * static_cast<double>(question_tokens);
  const double dems = static_cast<double>(retained_demo_tokens);
  if (config.eq8_literal) return (dems - budget) / dems;
  return budget / dems;
}

inline double base_demo_ratio(std::size_t total_tokens, std::size_t retained_demo_tokens, std::size_t instruction_tokens,
                              std::size_t question_tokens, const CompressionConfig& config) {
  return clamp_unit(base_demo_ratio_raw(total_tokens, retained_demo_tokens, instruction_tokens, question_tokens, config));
}

inline double per_demo_ratio(double tau_dems, std::size_t rank, std::size_t n_demos, double k1) {
  return clamp_unit(tau_dems + slope_term(rank, n_demos) * k1);
}

inline double per_demo_openbook(double tau_o, std::size_t rank, std::size_t n_demos, double k2) {
  return clamp_unit(tau_o - slope_term(rank, n_demos) * k2);
}

/// The per-demonstration slope is applied to the unclamped base ratio; only
/// the final per-demonstration values are clamped. A budget that exceeds the
/// retained length therefore keeps every retained demonstration whole.
inline AllocationPlan allocate(std::size_t total_tokens, std::size_t retained_demo_tokens, std::size_t n_retained,
                               std::size_t instruction_tokens, std::size_t question_tokens,
                               const CompressionConfig& config) {
  const double raw = base_demo_ratio_raw(total_tokens, retained_demo_tokens, instruction_tokens, question_tokens, config);
  AllocationPlan plan;
  plan.tau_dems = clamp_unit(raw);
  plan.tau_ins = config.tau_ins;
  plan.tau_q = config.tau_q;
  plan.tau_o = config.tau_o;
  plan.per_demo.reserve(n_retained);
  for (std::size_t r = 0; r < n_retained; ++r)
    plan.per_demo.push_back({per_demo_ratio(raw, r, n_retained, config.k1),
                             per_demo_openbook(config.tau_o, r, n_retained, config.k2)});
  return plan;
}

/// (τ_s, effective τ_o) for a segment. Question segments get no contrast
/// budget: conditioning on the question is vacuous for its own tokens.
inline DemoRatios segment_ratio(const Origin& origin, const AllocationPlan& plan) {
  switch (origin.kind) {
    case Origin::Kind::Instruction: return {plan.tau_ins, plan.tau_o};
    case Origin::Kind::Question: return {plan.tau_q, 0.0};
    case Origin::Kind::Demonstration:
      if (origin.demo_rank >= plan.per_demo.size())
        throw Error(ErrorCode::UnknownOrigin, "demonstration rank " + std::to_string(origin.demo_rank) + " not in plan");
      return plan.per_demo[origin.demo_rank];
  }
  throw Error(ErrorCode::UnknownOrigin, "unrecognized segment origin");
}

}  // namespace pc
