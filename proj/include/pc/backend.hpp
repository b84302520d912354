// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pc/types.hpp"

namespace pc {

/// Natural-log probabilities, one per target token.
struct LogProbVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
};

struct EmbeddingVector {
  std::vector<double> values;

  double norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
  }
};

/// Tokenizer plus causal language model. Implementations must tolerate
/// concurrent const calls.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual TokenSeq tokenize(std::string_view text) const = 0;
  virtual std::string detokenize(std::span<const TokenId> tokens) const = 0;

  /// values[i] = log p(target[i] | context, target[0..i)). Throws
  /// ContextOverflow when context + target exceeds context_window().
  virtual LogProbVector score_logprobs(std::span<const TokenId> context,
                                       std::span<const TokenId> target) const = 0;

  virtual std::size_t context_window() const { return std::numeric_limits<std::size_t>::max(); }

  std::string detokenize(const TokenSeq& seq) const { return detokenize(seq.ids()); }
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
};

class QuestionGenerator {
 public:
  virtual ~QuestionGenerator() = default;
  /// Between 0 and n guiding questions for `question`.
  virtual std::vector<std::string> generate_guiding(std::string_view question, std::size_t n) const = 0;
};

/// The model-dependent services a compression job needs. The generator is
/// optional; without one the job runs with the input question alone.
struct Backends {
  const Scorer& scorer;
  const Embedder& embedder;
  const QuestionGenerator* generator = nullptr;
};

inline void check_window(std::size_t window, std::size_t context_len, std::size_t target_len) {
  if (context_len + target_len > window)
    throw Error(ErrorCode::ContextOverflow, "context " + std::to_string(context_len) + " + target " +
                                                std::to_string(target_len) + " exceeds window " +
                                                std::to_string(window));
}

inline void check_window(const Scorer& scorer, std::size_t context_len, std::size_t target_len) {
  check_window(scorer.context_window(), context_len, target_len);
}

}  // namespace pc
