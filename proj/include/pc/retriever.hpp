// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "pc/backend.hpp"
#include "pc/config.hpp"
#include "pc/guiding.hpp"

namespace pc {

struct ScoredDemo {
  std::size_t index = 0;                    // position in the input bundle
  std::vector<double> per_question_scores;  // one per condition text
  double aggregate = 0.0;                   // weighted sum of the above
  std::size_t token_length = 0;
};

/// Sum of log p(con_i | demo, con_<i). When demo + condition text do not fit
/// in the window, only the demo's opening tokens are used as context.
inline double condition_perplexity(const TokenSeq& demo, const ConditionText& con, const Scorer& scorer,
                                   std::size_t window) {
  if (con.tokens.empty()) return 0.0;
  window = std::min(window, scorer.context_window());
  if (con.tokens.size() > window) check_window(window, 0, con.tokens.size());
  const std::size_t keep = std::min(demo.size(), window - con.tokens.size());
  auto lp = scorer.score_logprobs(std::span(demo.tokens).first(keep), con.tokens.ids());
  return lp.sum();
}

/// Σ_j w_j · s_j, accumulated left to right.
inline double perception_perplexity(std::span<const double> scores, std::span<const double> weights) {
  if (scores.size() != weights.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(scores.size()) + " scores vs " + std::to_string(weights.size()) +
                                               " weights");
  double r = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) r += weights[j] * scores[j];
  return r;
}

inline std::vector<ScoredDemo> score_demonstrations(std::span<const TokenSeq> demos, std::span<const ConditionText> cons,
                                                    std::span<const double> weights, const Scorer& scorer,
                                                    std::size_t window) {
  std::vector<ScoredDemo> out;
  out.reserve(demos.size());
  for (std::size_t k = 0; k < demos.size(); ++k) {
    ScoredDemo d;
    d.index = k;
    d.token_length = demos[k].size();
    d.per_question_scores.reserve(cons.size());
    for (const auto& con : cons) d.per_question_scores.push_back(condition_perplexity(demos[k], con, scorer, window));
    d.aggregate = perception_perplexity(d.per_question_scores, weights);
    out.push_back(std::move(d));
  }
  return out;
}

/// Descending aggregate score; equal scores keep the lower input index first.
inline std::vector<ScoredDemo> rank_demos(std::vector<ScoredDemo> scored) {
  std::sort(scored.begin(), scored.end(), [](const ScoredDemo& a, const ScoredDemo& b) {
    if (a.aggregate != b.aggregate) return a.aggregate > b.aggregate;
    return a.index < b.index;
  });
  return scored;
}

/// Coarse token budget μ·τ·L.
inline double coarse_budget(std::size_t total_tokens, const CompressionConfig& config) {
  return config.mu * config.tau * static_cast<double>(total_tokens);
}

/// Ranks the demonstrations and admits them in rank order while
/// L_ins + L_q + Σ admitted lengths stays within μ·τ·L. Admission stops at the
/// first demonstration that does not fit; the top-ranked one is always kept.
inline std::vector<ScoredDemo> rank_and_retain(std::vector<ScoredDemo> scored, std::size_t instruction_tokens,
                                               std::size_t question_tokens, std::size_t total_tokens,
                                               const CompressionConfig& config) {
  if (scored.empty()) throw Error(ErrorCode::EmptyDemos, "nothing to rank");
  auto ranked = rank_demos(std::move(scored));
  const double budget = coarse_budget(total_tokens, config);
  double used = static_cast<double>(instruction_tokens + question_tokens);
  std::size_t admitted = 0;
  for (const auto& d : ranked) {
    if (admitted > 0 && used + static_cast<double>(d.token_length) > budget) break;
    used += static_cast<double>(d.token_length);
    ++admitted;
  }
  ranked.resize(admitted);
  return ranked;
}

}  // namespace pc
