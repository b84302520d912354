// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded generator for retrieval corpora: each bundle has one gold
// demonstration that contains the question verbatim, surrounded by filler
// demonstrations drawn from a shared pseudo-word pool.

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pc/types.hpp"

namespace pc::synthetic {

struct Options {
  std::size_t n_examples = 100;
  std::size_t n_demos = 20;
  std::size_t demo_words = 140;
  std::size_t filler_vocab = 400;
  std::size_t entity_vocab = 1500;
  std::uint64_t seed = 7;
};

inline constexpr const char* kInstruction =
    "Write a high-quality answer for the given question using only the provided search results.";

class Generator {
 public:
  explicit Generator(const Options& options) : opt_(options), rng_(options.seed) {
    std::set<std::string> seen(std::begin(kFunctionWords), std::end(kFunctionWords));
    filler_ = make_words(opt_.filler_vocab, 2, seen);
    entities_ = make_words(opt_.entity_vocab, 3, seen);
  }

  std::vector<PromptBundle> bundles() {
    std::vector<PromptBundle> out;
    out.reserve(opt_.n_examples);
    for (std::size_t i = 0; i < opt_.n_examples; ++i) out.push_back(bundle(i));
    return out;
  }

 private:
  static constexpr const char* kFunctionWords[] = {"the", "of", "and", "in", "to", "was", "for", "on", "by", "with", "as", "at"};

  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }

  std::vector<std::string> make_words(std::size_t count, std::size_t syllables, std::set<std::string>& seen) {
    static constexpr char kConsonants[] = "bdfgklmnprstvz";
    static constexpr char kVowels[] = "aeiou";
    std::vector<std::string> out;
    while (out.size() < count) {
      std::string w;
      auto n = syllables + pick(2);
      for (std::size_t s = 0; s < n; ++s) {
        w += kConsonants[pick(sizeof(kConsonants) - 1)];
        w += kVowels[pick(sizeof(kVowels) - 1)];
      }
      if (seen.insert(w).second) out.push_back(std::move(w));
    }
    return out;
  }

  std::string filler_word() {
    if (pick(10) < 3) return kFunctionWords[pick(std::size(kFunctionWords))];
    return filler_[pick(filler_.size())];
  }

  // Sentences of 8..16 words ending in '.'. `insert` goes in as its own
  // sentence at a random sentence boundary.
  std::string passage(const std::string* insert) {
    std::vector<std::string> sentences;
    std::size_t words = 0;
    while (words < opt_.demo_words) {
      auto len = std::min<std::size_t>(8 + pick(9), opt_.demo_words - words);
      std::string s;
      for (std::size_t w = 0; w < len; ++w) {
        if (w) s += ' ';
        s += filler_word();
      }
      s += '.';
      sentences.push_back(std::move(s));
      words += len;
    }
    if (insert) sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(pick(sentences.size() + 1)), *insert);
    std::string text;
    for (const auto& s : sentences) {
      if (!text.empty()) text += ' ';
      text += s;
    }
    return text;
  }

  PromptBundle bundle(std::size_t i) {
    PromptBundle b;
    b.id = "syn-" + std::to_string(i);
    b.instruction = kInstruction;
    const auto& e1 = entities_[pick(entities_.size())];
    const auto& e2 = entities_[pick(entities_.size())];
    const auto& e3 = entities_[pick(entities_.size())];
    b.question = "where did the " + e1 + " " + e2 + " meet the " + e3 + "?";
    const auto gold = pick(opt_.n_demos);
    for (std::size_t k = 0; k < opt_.n_demos; ++k) {
      Demonstration d;
      d.is_gold = k == gold;
      d.text = passage(d.is_gold ? &b.question : nullptr);
      b.demonstrations.push_back(std::move(d));
    }
    return b;
  }

  Options opt_;
  std::mt19937_64 rng_;
  std::vector<std::string> filler_;
  std::vector<std::string> entities_;
};

inline std::vector<PromptBundle> make_corpus(const Options& options) { return Generator(options).bundles(); }

}  // namespace pc::synthetic
