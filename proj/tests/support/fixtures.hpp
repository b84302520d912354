// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pc/config.hpp"
#include "pc/dataset.hpp"
#include "pc/synthetic.hpp"
#include "pc/toy_backends.hpp"

namespace pc::testing {

/// Toy backends trained the same way the command line trains them.
inline std::unique_ptr<ToyBackendSet> toy_for(const std::vector<PromptBundle>& bundles,
                                              const std::string& restrict_text = kDefaultRestrictText) {
  auto corpus = bundle_texts(bundles);
  corpus.push_back(restrict_text);
  return std::make_unique<ToyBackendSet>(corpus);
}

inline std::vector<PromptBundle> synthetic_bundles(std::size_t n, std::uint64_t seed, std::size_t n_demos = 20,
                                                   std::size_t demo_words = 140) {
  synthetic::Options opt;
  opt.n_examples = n;
  opt.seed = seed;
  opt.n_demos = n_demos;
  opt.demo_words = demo_words;
  return synthetic::make_corpus(opt);
}

inline std::size_t gold_of(const PromptBundle& b) {
  for (std::size_t k = 0; k < b.demonstrations.size(); ++k)
    if (b.demonstrations[k].is_gold) return k;
  return b.demonstrations.size();
}

}  // namespace pc::testing
