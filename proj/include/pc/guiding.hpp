// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "pc/backend.hpp"

namespace pc {

/// questions[0] is the input question with weight exactly 1; the rest are
/// guiding questions weighted by cosine similarity to it. Weights are not
/// clipped or normalized, so negative similarities stay negative.
struct WeightedQuestionSet {
  std::vector<std::string> questions;
  std::vector<double> weights;
  std::vector<std::string> warnings;
};

/// Token sequence of instruction ⊕ question variant ⊕ restrict text.
struct ConditionText {
  TokenSeq tokens;
};

/// (a · b) / (|a| |b|). Throws ZeroNormEmbedding if either norm is zero.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "embedding dimensions differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ZeroNormEmbedding, "zero-norm embedding");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Weights for precomputed embeddings; `e[0]` belongs to the input question.
/// Entries whose embedding has zero norm are reported in `dropped`.
inline std::vector<double> similarity_weights(std::span<const EmbeddingVector> e, std::vector<std::size_t>* dropped = nullptr) {
  std::vector<double> w;
  if (e.empty()) return w;
  w.push_back(1.0);
  for (std::size_t j = 1; j < e.size(); ++j) {
    try {
      w.push_back(cosine_similarity(e[0].values, e[j].values));
    } catch (const Error& err) {
      if (err.code() != ErrorCode::ZeroNormEmbedding) throw;
      if (dropped) dropped->push_back(j);
    }
  }
  return w;
}

inline WeightedQuestionSet derive_weights(const std::string& q0, const std::vector<std::string>& guiding,
                                          const Embedder& embedder) {
  WeightedQuestionSet out;
  out.questions.push_back(q0);
  out.weights.push_back(1.0);
  if (guiding.empty()) return out;
  auto e0 = embedder.embed(q0);
  if (e0.norm() == 0.0) {
    out.warnings.push_back("input question has a zero-norm embedding; guiding questions dropped");
    return out;
  }
  for (const auto& g : guiding) {
    auto e = embedder.embed(g);
    if (e.norm() == 0.0) {
      out.warnings.push_back("dropped guiding question with zero-norm embedding: '" + g + "'");
      continue;
    }
    out.questions.push_back(g);
    out.weights.push_back(cosine_similarity(e0.values, e.values));
  }
  return out;
}

/// Asks the generator for n guiding questions. A missing or unavailable
/// generator degrades to the empty list with a warning.
inline std::vector<std::string> gather_guiding(const std::string& q0, std::size_t n, const QuestionGenerator* generator,
                                               std::vector<std::string>& warnings) {
  if (n == 0) return {};
  if (generator == nullptr) {
    warnings.push_back("no guiding-question generator attached; using the input question only");
    return {};
  }
  try {
    auto qs = generator->generate_guiding(q0, n);
    if (qs.size() > n) qs.resize(n);
    return qs;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::BackendUnavailable && err.code() != ErrorCode::Timeout &&
        err.code() != ErrorCode::ProtocolError)
      throw;
    warnings.push_back(std::string("guiding-question generation failed, using the input question only: ") + err.what());
    return {};
  }
}

inline std::vector<ConditionText> build_condition_texts(const std::string& instruction, const WeightedQuestionSet& qset,
                                                        const std::string& restrict_text, const Scorer& scorer) {
  if (qset.questions.empty()) throw Error(ErrorCode::LengthMismatch, "question set is empty");
  auto ins = scorer.tokenize(instruction);
  auto rest = scorer.tokenize(restrict_text);
  std::vector<ConditionText> out;
  out.reserve(qset.questions.size());
  for (const auto& q : qset.questions) {
    ConditionText con;
    con.tokens = ins;
    con.tokens.append(scorer.tokenize(q));
    con.tokens.append(rest);
    out.push_back(std::move(con));
  }
  return out;
}

}  // namespace pc
