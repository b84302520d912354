// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic desk-scale backends: a byte-fallback word tokenizer, an
// add-one smoothed bigram LM with a unigram cache, a hashed bag-of-words
// embedder and a template guiding-question generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pc/backend.hpp"

namespace pc {

namespace detail {

inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace detail

/// Splits text into pieces whose concatenation is the text: a word run with
/// at most one leading space, a single punctuation byte with at most one
/// leading space, or a whitespace run (minus a final space that is claimed by
/// the following piece).
inline std::vector<SourceSpan> pretokenize(std::string_view text) {
  std::vector<SourceSpan> out;
  const auto n = text.size();
  auto at = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  std::size_t i = 0;
  while (i < n) {
    std::size_t start = i;
    if (at(i) == ' ' && i + 1 < n && !detail::is_space_byte(at(i + 1))) {
      ++i;  // leading space joins the next piece
    } else if (detail::is_space_byte(at(i))) {
      while (i < n && detail::is_space_byte(at(i))) {
        if (at(i) == ' ' && i + 1 < n && !detail::is_space_byte(at(i + 1)) && i > start) break;
        ++i;
      }
      out.push_back({start, i - start});
      continue;
    }
    if (detail::is_word_byte(at(i))) {
      while (i < n && detail::is_word_byte(at(i))) ++i;
    } else {
      ++i;
    }
    out.push_back({start, i - start});
  }
  return out;
}

/// Ids 0..255 are raw bytes; ids from 256 are multi-byte pieces seen in the
/// training corpus, in lexicographic byte order. Any piece not in the table is
/// spelled out with byte tokens, so detokenize(tokenize(t)) == t exactly.
class ToyVocabulary {
 public:
  static constexpr TokenId kByteTokens = 256;

  ToyVocabulary() = default;

  static ToyVocabulary from_corpus(const std::vector<std::string>& texts) {
    std::vector<std::string> pieces;
    for (const auto& t : texts)
      for (auto span : pretokenize(t))
        if (span.length > 1) pieces.emplace_back(t.substr(span.offset, span.length));
    return from_pieces(std::move(pieces));
  }

  static ToyVocabulary from_pieces(std::vector<std::string> pieces) {
    std::sort(pieces.begin(), pieces.end());
    pieces.erase(std::unique(pieces.begin(), pieces.end()), pieces.end());
    ToyVocabulary v;
    for (auto& p : pieces) {
      if (p.size() < 2) continue;
      v.index_.emplace(p, kByteTokens + static_cast<TokenId>(v.pieces_.size()));
      v.pieces_.push_back(std::move(p));
    }
    return v;
  }

  std::size_t size() const noexcept { return kByteTokens + pieces_.size(); }

  std::string piece(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= size()) throw Error(ErrorCode::OutOfRange, "token id " + std::to_string(id));
    if (id < kByteTokens) return std::string(1, static_cast<char>(id));
    return pieces_[static_cast<std::size_t>(id - kByteTokens)];
  }

  std::optional<TokenId> lookup(std::string_view piece) const {
    auto it = index_.find(std::string(piece));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  TokenSeq tokenize(std::string_view text) const {
    TokenSeq out;
    for (auto span : pretokenize(text)) {
      auto piece = text.substr(span.offset, span.length);
      if (auto id = lookup(piece); id && span.length > 1) {
        out.push_back(*id, span);
      } else {
        for (std::size_t b = 0; b < span.length; ++b)
          out.push_back(static_cast<TokenId>(static_cast<unsigned char>(piece[b])), {span.offset + b, 1});
      }
    }
    return out;
  }

  std::string detokenize(std::span<const TokenId> ids) const {
    std::string out;
    for (auto id : ids) out += piece(id);
    return out;
  }

 private:
  std::vector<std::string> pieces_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Add-one smoothed bigram model interpolated with a unigram cache over the
/// whole history:
///
///   p(t | h) = (1 - λ) (c(h_last, t) + 1) / (c(h_last) + V) + λ n_h(t) / |h|
///
/// and, for an empty history, the smoothed unigram (c(t) + 1) / (N + V).
/// λ = 0 gives the plain bigram model. The cache makes the score of a token
/// depend on everything in the context, not just the previous token.
class ToyBigramLM final : public Scorer {
 public:
  ToyBigramLM(ToyVocabulary vocab, const std::vector<std::string>& corpus, double cache_weight = 0.5,
              std::size_t window = std::numeric_limits<std::size_t>::max())
      : vocab_(std::move(vocab)), cache_weight_(cache_weight), window_(window) {
    if (!(cache_weight_ >= 0.0 && cache_weight_ < 1.0)) throw Error::out_of_range("cache_weight", "must lie in [0,1)");
    const auto v = vocab_.size();
    unigram_.assign(v, 0);
    rows_.resize(v);
    row_totals_.assign(v, 0);
    for (const auto& text : corpus) {
      auto seq = vocab_.tokenize(text);
      for (std::size_t i = 0; i < seq.size(); ++i) {
        auto t = static_cast<std::size_t>(seq.tokens[i]);
        ++unigram_[t];
        ++total_;
        if (i > 0) {
          auto prev = static_cast<std::size_t>(seq.tokens[i - 1]);
          ++rows_[prev][seq.tokens[i]];
          ++row_totals_[prev];
        }
      }
    }
  }

  /// Vocabulary and corpus from the same texts.
  static std::shared_ptr<ToyBigramLM> train(const std::vector<std::string>& corpus, double cache_weight = 0.5,
                                            std::size_t window = std::numeric_limits<std::size_t>::max()) {
    return std::make_shared<ToyBigramLM>(ToyVocabulary::from_corpus(corpus), corpus, cache_weight, window);
  }

  const ToyVocabulary& vocabulary() const noexcept { return vocab_; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }
  double cache_weight() const noexcept { return cache_weight_; }

  std::uint64_t unigram_count(TokenId t) const { return unigram_.at(check_id(t)); }
  std::uint64_t total_count() const noexcept { return total_; }
  std::uint64_t row_total(TokenId prev) const { return row_totals_.at(check_id(prev)); }
  std::uint64_t bigram_count(TokenId prev, TokenId next) const {
    const auto& row = rows_.at(check_id(prev));
    auto it = row.find(next);
    return it == row.end() ? 0 : it->second;
  }

  double start_probability(TokenId t) const {
    return (static_cast<double>(unigram_count(t)) + 1.0) / (static_cast<double>(total_) + static_cast<double>(vocab_size()));
  }

  double bigram_probability(TokenId prev, TokenId next) const {
    check_id(next);
    return (static_cast<double>(bigram_count(prev, next)) + 1.0) /
           (static_cast<double>(row_total(prev)) + static_cast<double>(vocab_size()));
  }

  /// Predictive distribution over the whole vocabulary after `history`.
  std::vector<double> distribution(std::span<const TokenId> history) const {
    std::vector<double> out(vocab_size());
    if (history.empty()) {
      for (std::size_t t = 0; t < out.size(); ++t) out[t] = start_probability(static_cast<TokenId>(t));
      return out;
    }
    std::vector<std::uint32_t> cache(vocab_size(), 0);
    for (auto t : history) ++cache[check_id(t)];
    for (std::size_t t = 0; t < out.size(); ++t)
      out[t] = mix(bigram_probability(history.back(), static_cast<TokenId>(t)), cache[t], history.size());
    return out;
  }

  TokenSeq tokenize(std::string_view text) const override { return vocab_.tokenize(text); }
  std::string detokenize(std::span<const TokenId> tokens) const override { return vocab_.detokenize(tokens); }
  using Scorer::detokenize;
  std::size_t context_window() const override { return window_; }

  LogProbVector score_logprobs(std::span<const TokenId> context, std::span<const TokenId> target) const override {
    check_window(*this, context.size(), target.size());
    LogProbVector out;
    out.values.reserve(target.size());
    if (target.empty()) return out;
    std::vector<std::uint32_t> cache(vocab_size(), 0);
    for (auto t : context) ++cache[check_id(t)];
    std::size_t history = context.size();
    TokenId prev = context.empty() ? -1 : context.back();
    for (auto t : target) {
      auto idx = check_id(t);
      double p = history == 0 ? start_probability(t) : mix(bigram_probability(prev, t), cache[idx], history);
      out.values.push_back(std::log(p));
      ++cache[idx];
      ++history;
      prev = t;
    }
    return out;
  }

 private:
  std::size_t check_id(TokenId t) const {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size())
      throw Error(ErrorCode::OutOfRange, "token id " + std::to_string(t) + " outside vocabulary");
    return static_cast<std::size_t>(t);
  }

  double mix(double bigram, std::uint32_t cache_count, std::size_t history) const {
    return (1.0 - cache_weight_) * bigram + cache_weight_ * static_cast<double>(cache_count) / static_cast<double>(history);
  }

  ToyVocabulary vocab_;
  double cache_weight_;
  std::size_t window_;
  std::vector<std::uint64_t> unigram_;
  std::uint64_t total_ = 0;
  std::vector<std::unordered_map<TokenId, std::uint32_t>> rows_;
  std::vector<std::uint64_t> row_totals_;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Lower-cased word runs, each hashed into one of `dim` buckets.
class HashedBagEmbedder final : public Embedder {
 public:
  explicit HashedBagEmbedder(std::size_t dim = 4096) : dim_(dim) {
    if (dim_ == 0) throw Error::out_of_range("dim", "must be > 0");
  }

  std::size_t dim() const noexcept { return dim_; }

  static std::vector<std::string> terms(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
      if (detail::is_word_byte(c)) {
        cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
      } else if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

  EmbeddingVector embed(std::string_view text) const override {
    EmbeddingVector v;
    v.values.assign(dim_, 0.0);
    for (const auto& term : terms(text)) v.values[fnv1a64(term) % dim_] += 1.0;
    return v;
  }

 private:
  std::size_t dim_;
};

/// Deterministic paraphrase templates; every output embeds the question.
class TemplateQuestionStub final : public QuestionGenerator {
 public:
  std::vector<std::string> generate_guiding(std::string_view question, std::size_t n) const override {
    static constexpr std::string_view kTemplates[] = {
        "What background is needed to answer: ",
        "Which entities are involved in: ",
        "What evidence would support an answer to: ",
        "What time or place is relevant to: ",
        "What related facts help explain: ",
    };
    constexpr std::size_t kCount = std::size(kTemplates);
    std::string core(question);
    while (!core.empty() && (core.back() == '?' || detail::is_space_byte(static_cast<unsigned char>(core.back()))))
      core.pop_back();
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::string q(kTemplates[i % kCount]);
      q += core;
      if (i >= kCount) q += " (variant " + std::to_string(i / kCount + 1) + ")";
      q += '?';
      out.push_back(std::move(q));
    }
    return out;
  }
};

/// Owns one set of toy backends trained on `corpus`.
struct ToyBackendSet {
  std::shared_ptr<ToyBigramLM> scorer;
  HashedBagEmbedder embedder;
  TemplateQuestionStub generator;

  explicit ToyBackendSet(const std::vector<std::string>& corpus, double cache_weight = 0.5)
      : scorer(ToyBigramLM::train(corpus, cache_weight)) {}

  Backends backends() const { return Backends{*scorer, embedder, &generator}; }
};

}  // namespace pc
