// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pc/allocator.hpp"
#include "pc/backend.hpp"
#include "pc/config.hpp"
#include "pc/guiding.hpp"
#include "pc/report.hpp"
#include "pc/retriever.hpp"

namespace pc {

struct PromptPart {
  TokenSeq tokens;
  Origin origin;
};

struct Segment {
  std::size_t id = 0;
  TokenSeq tokens;
  Origin origin;
};

/// P[i]: log-prob of token i given the compressed prefix and the segment's
/// earlier tokens. Q[i]: gain in that log-prob when the question is put in
/// front of the prefix.
struct SegmentScore {
  std::vector<double> P;
  std::vector<double> Q;
};

struct Selection {
  std::vector<std::size_t> indices;  // ascending
  std::size_t n_kit = 0;
  std::size_t n_nit = 0;
};

/// Joins the compressed instruction, demonstrations and question in the
/// output text. It is not part of the token accounting.
inline constexpr const char* kPartSeparator = "\n\n";

struct CompressedPrompt {
  TokenSeq tokens;
  std::string text;
  CompressionReport report;
};

/// Per-segment internals, recorded on request.
struct SegmentTrace {
  Segment segment;
  std::vector<TokenId> prefix;  // compressed output before this segment
  SegmentScore score;
  DemoRatios ratios;
  Selection selection;
};

struct CompressionTrace {
  WeightedQuestionSet questions;
  std::vector<ScoredDemo> ranked;  // retained, in output order
  AllocationPlan plan;
  std::vector<SegmentTrace> segments;
};

/// Chunks every part into runs of at most `segment_size` tokens. Segments
/// never cross part boundaries; ids count up from 0 in prompt order.
inline std::vector<Segment> segmentize(std::span<const PromptPart> parts, std::size_t segment_size) {
  if (segment_size == 0) throw Error::out_of_range("segment_size", "must be > 0");
  std::vector<Segment> out;
  for (const auto& part : parts) {
    for (std::size_t first = 0; first < part.tokens.size(); first += segment_size) {
      const auto n = std::min(segment_size, part.tokens.size() - first);
      out.push_back({out.size(), part.tokens.slice(first, n), part.origin});
    }
  }
  return out;
}

/// Two scoring passes over the segment: once after the prefix, once after
/// question ⊕ prefix. When the three do not fit in the window the oldest
/// prefix tokens go first, then the question's opening tokens.
inline SegmentScore score_segment(const Segment& seg, std::span<const TokenId> prefix, std::span<const TokenId> question,
                                  const Scorer& scorer, std::size_t window) {
  window = std::min(window, scorer.context_window());
  const auto len = seg.tokens.size();
  if (len > window) check_window(window, 0, len);
  const auto q_keep = std::min(question.size(), window - len);
  const auto p_keep = std::min(prefix.size(), window - len - q_keep);
  auto q_ctx = question.last(q_keep);
  auto p_ctx = prefix.last(p_keep);

  std::vector<TokenId> with_question;
  with_question.reserve(q_keep + p_keep);
  with_question.insert(with_question.end(), q_ctx.begin(), q_ctx.end());
  with_question.insert(with_question.end(), p_ctx.begin(), p_ctx.end());

  auto plain = scorer.score_logprobs(p_ctx, seg.tokens.ids());
  auto guided = scorer.score_logprobs(with_question, seg.tokens.ids());
  if (plain.size() != len || guided.size() != len)
    throw Error(ErrorCode::LengthMismatch, "scorer returned the wrong number of log-probabilities");

  SegmentScore s;
  s.P = std::move(plain.values);
  s.Q.resize(len);
  for (std::size_t i = 0; i < len; ++i) s.Q[i] = guided.values[i] - s.P[i];
  return s;
}

inline std::size_t round_half_up(double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); }

/// Token budgets for a segment of `length` tokens: N_total = round(τ_s·L),
/// N_KIT = min(N_total, round(N_total·τ_o)), N_NIT = N_total - N_KIT.
inline std::pair<std::size_t, std::size_t> selection_counts(std::size_t length, double tau_s, double tau_o) {
  const auto total = std::min(length, round_half_up(tau_s * static_cast<double>(length)));
  const auto kit = std::min(total, round_half_up(static_cast<double>(total) * tau_o));
  return {kit, total - kit};
}

/// semi_guided: the N_KIT highest-Q tokens, then the N_NIT lowest-P tokens
/// among the rest. contrast_only: the N_total highest-Q tokens.
/// perplexity_only: the N_total lowest-P (most surprising) tokens. Ties go to
/// the lower index. Indices are returned in ascending order.
inline Selection select_tokens(const SegmentScore& score, double tau_s, double tau_o, Strategy strategy) {
  const auto len = score.P.size();
  if (score.Q.size() != len) throw Error(ErrorCode::LengthMismatch, "P and Q lengths differ");
  auto [kit, nit] = selection_counts(len, tau_s, tau_o);
  if (strategy == Strategy::ContrastOnly) {
    kit += nit;
    nit = 0;
  } else if (strategy == Strategy::PerplexityOnly) {
    nit += kit;
    kit = 0;
  }

  std::vector<std::size_t> order(len);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto by_q = [&](std::size_t a, std::size_t b) {
    if (score.Q[a] != score.Q[b]) return score.Q[a] > score.Q[b];
    return a < b;
  };
  auto by_p = [&](std::size_t a, std::size_t b) {
    if (score.P[a] != score.P[b]) return score.P[a] < score.P[b];
    return a < b;
  };

  Selection sel;
  sel.n_kit = kit;
  sel.n_nit = nit;
  auto rest = order.begin();
  if (kit > 0) {
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kit), order.end(), by_q);
    rest = order.begin() + static_cast<std::ptrdiff_t>(kit);
  }
  if (nit > 0) std::partial_sort(rest, rest + static_cast<std::ptrdiff_t>(nit), order.end(), by_p);
  sel.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kit + nit));
  std::sort(sel.indices.begin(), sel.indices.end());
  return sel;
}

/// Tokenized bundle plus the retrieval scores of every demonstration.
struct BundleScores {
  TokenSeq instruction;
  TokenSeq question;
  std::vector<TokenSeq> demos;
  std::size_t total_tokens = 0;
  WeightedQuestionSet questions;
  std::vector<ScoredDemo> scored;  // input order
};

inline BundleScores score_bundle(const PromptBundle& bundle, const CompressionConfig& config, const Backends& backends,
                                 std::vector<std::string>& warnings) {
  require_compressible(bundle);
  const Scorer& scorer = backends.scorer;
  BundleScores b;
  b.instruction = scorer.tokenize(bundle.instruction);
  b.question = scorer.tokenize(bundle.question);
  b.total_tokens = b.instruction.size() + b.question.size();
  b.demos.reserve(bundle.demonstrations.size());
  for (const auto& d : bundle.demonstrations) {
    b.demos.push_back(scorer.tokenize(d.text));
    b.total_tokens += b.demos.back().size();
  }
  auto guiding = gather_guiding(bundle.question, config.n_guiding, backends.generator, warnings);
  b.questions = derive_weights(bundle.question, guiding, backends.embedder);
  warnings.insert(warnings.end(), b.questions.warnings.begin(), b.questions.warnings.end());
  const auto cons = build_condition_texts(bundle.instruction, b.questions, config.restrict_text, scorer);
  b.scored = score_demonstrations(b.demos, cons, b.questions.weights, scorer, config.context_window);
  return b;
}

/// Input indices of all demonstrations in descending score order, with no
/// budget applied.
inline std::vector<std::size_t> retrieval_ranking(const PromptBundle& bundle, const CompressionConfig& config,
                                                  const Backends& backends) {
  std::vector<std::string> warnings;
  auto b = score_bundle(bundle, validate_config(config), backends, warnings);
  std::vector<std::size_t> order;
  for (const auto& d : rank_demos(std::move(b.scored))) order.push_back(d.index);
  return order;
}

/// Full pipeline: guiding questions, demonstration scoring and reordering,
/// ratio allocation, then front-to-back segment compression that feeds each
/// compressed segment into the context of the next.
inline CompressedPrompt compress(const PromptBundle& bundle, const CompressionConfig& raw_config, const Backends& backends,
                                 CompressionTrace* trace = nullptr) {
  const auto config = validate_config(raw_config);
  const Scorer& scorer = backends.scorer;

  CompressedPrompt out;
  auto& report = out.report;
  report.id = bundle.id;

  auto b = score_bundle(bundle, config, backends, report.warnings);
  const auto& instruction = b.instruction;
  const auto& question = b.question;
  const auto total = b.total_tokens;
  report.original_tokens = total;
  for (const auto& d : b.scored) report.per_demo_rk.emplace_back(d.index, d.aggregate);
  auto retained = rank_and_retain(std::move(b.scored), instruction.size(), question.size(), total, config);

  std::size_t retained_tokens = 0;
  for (const auto& d : retained) retained_tokens += d.token_length;
  if (retained_tokens == 0) throw Error(ErrorCode::EmptyDemos, "retained demonstrations have no tokens");
  const auto plan = allocate(total, retained_tokens, retained.size(), instruction.size(), question.size(), config);
  report.tau_dems = plan.tau_dems;

  std::vector<PromptPart> parts;
  parts.reserve(retained.size() + 2);
  if (!instruction.empty()) parts.push_back({instruction, Origin::instruction()});
  for (std::size_t r = 0; r < retained.size(); ++r) {
    const auto k = retained[r].index;
    report.retained_demo_indices.push_back(k);
    report.per_demo_tau.emplace_back(k, plan.per_demo[r]);
    parts.push_back({b.demos[k], Origin::demonstration(r, k)});
  }
  parts.push_back({question, Origin::question()});

  auto segments = segmentize(parts, config.segment_size);
  std::vector<TokenSeq> kept_per_part;
  for (std::size_t j = 0; j < segments.size(); ++j) {
    const auto& seg = segments[j];
    if (j == 0 || !(seg.origin == segments[j - 1].origin)) kept_per_part.emplace_back();
    auto score = score_segment(seg, out.tokens.ids(), question.ids(), scorer, config.context_window);
    auto ratios = segment_ratio(seg.origin, plan);
    auto sel = select_tokens(score, ratios.tau_dems, ratios.tau_o, config.strategy);
    if (trace) trace->segments.push_back({seg, out.tokens.tokens, score, ratios, sel});
    for (auto i : sel.indices) {
      out.tokens.push_back(seg.tokens.tokens[i], seg.tokens.spans[i]);
      kept_per_part.back().push_back(seg.tokens.tokens[i], seg.tokens.spans[i]);
    }
    report.per_segment_counts.push_back({seg.id, seg.origin, sel.n_kit, sel.n_nit});
  }

  report.compressed_tokens = out.tokens.size();
  report.achieved_inverse_tau = inverse_ratio(report.original_tokens, report.compressed_tokens);
  for (const auto& part : kept_per_part) {
    if (part.empty()) continue;
    if (!out.text.empty()) out.text += kPartSeparator;
    out.text += scorer.detokenize(part);
  }

  if (trace) {
    trace->questions = std::move(b.questions);
    trace->ranked = std::move(retained);
    trace->plan = plan;
  }
  return out;
}

}  // namespace pc
