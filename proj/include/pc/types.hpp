// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pc/error.hpp"

namespace pc {

using TokenId = std::int32_t;

struct Demonstration {
  std::string text;
  bool is_gold = false;
};

/// A prompt split into its three components. The instruction may be empty;
/// compression jobs need a non-empty question and at least one demonstration.
struct PromptBundle {
  std::string id;
  std::string instruction;
  std::vector<Demonstration> demonstrations;
  std::string question;
};

inline void require_compressible(const PromptBundle& bundle) {
  if (bundle.demonstrations.empty()) throw Error(ErrorCode::EmptyDemos, "bundle has no demonstrations");
  if (bundle.question.empty()) throw Error(ErrorCode::ParseError, "bundle question is empty");
}

struct SourceSpan {
  std::size_t offset = 0;
  std::size_t length = 0;
  bool operator==(const SourceSpan&) const = default;
};

/// Token ids plus the character span each token covers in the text it came
/// from. The two vectors always have equal length.
struct TokenSeq {
  std::vector<TokenId> tokens;
  std::vector<SourceSpan> spans;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }

  void push_back(TokenId id, SourceSpan span) {
    tokens.push_back(id);
    spans.push_back(span);
  }

  void append(const TokenSeq& other) {
    tokens.insert(tokens.end(), other.tokens.begin(), other.tokens.end());
    spans.insert(spans.end(), other.spans.begin(), other.spans.end());
  }

  TokenSeq slice(std::size_t first, std::size_t count) const {
    TokenSeq out;
    out.tokens.assign(tokens.begin() + first, tokens.begin() + first + count);
    out.spans.assign(spans.begin() + first, spans.begin() + first + count);
    return out;
  }

  std::span<const TokenId> ids() const noexcept { return tokens; }

  bool operator==(const TokenSeq&) const = default;
};

/// Which part of the prompt a token range belongs to. `demo_rank` is the
/// 0-based position in the reordered demonstration list; `demo_index` is the
/// demonstration's position in the input bundle.
struct Origin {
  enum class Kind { Instruction, Demonstration, Question };
  Kind kind = Kind::Instruction;
  std::size_t demo_rank = 0;
  std::size_t demo_index = 0;

  static Origin instruction() { return {Kind::Instruction, 0, 0}; }
  static Origin question() { return {Kind::Question, 0, 0}; }
  static Origin demonstration(std::size_t rank, std::size_t index) { return {Kind::Demonstration, rank, index}; }

  bool operator==(const Origin&) const = default;
};

inline const char* to_string(Origin::Kind kind) {
  switch (kind) {
    case Origin::Kind::Instruction: return "instruction";
    case Origin::Kind::Demonstration: return "demonstration";
    case Origin::Kind::Question: return "question";
  }
  return "unknown";
}

}  // namespace pc
