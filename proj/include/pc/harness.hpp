// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pc/compressor.hpp"
#include "pc/dataset.hpp"

namespace pc {

struct RecallResult {
  std::map<std::size_t, double> per_k;  // k -> fraction of examples with gold in the top k
  std::size_t n_examples = 0;
};

/// `rankings[i]` lists demonstration indices of example i, best first.
inline RecallResult recall_at_k(std::span<const EvalExample> examples, std::span<const std::vector<std::size_t>> rankings,
                                std::size_t k_max) {
  if (examples.size() != rankings.size()) throw Error(ErrorCode::LengthMismatch, "one ranking per example is required");
  RecallResult r;
  r.n_examples = examples.size();
  std::vector<std::size_t> hits(k_max + 1, 0);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ranking = rankings[i];
    auto it = std::find(ranking.begin(), ranking.end(), examples[i].gold_index);
    if (it == ranking.end()) continue;
    const auto pos = static_cast<std::size_t>(it - ranking.begin());
    for (std::size_t k = pos + 1; k <= k_max; ++k) ++hits[k];
  }
  for (std::size_t k = 1; k <= k_max; ++k)
    r.per_k[k] = examples.empty() ? 0.0 : static_cast<double>(hits[k]) / static_cast<double>(examples.size());
  return r;
}

inline nlohmann::json to_json(const RecallResult& r) {
  nlohmann::json per_k = nlohmann::json::array();
  for (const auto& [k, v] : r.per_k) per_k.push_back({{"k", k}, {"recall", v}});
  return {{"n_examples", r.n_examples}, {"recall", std::move(per_k)}};
}

/// Runs `fn(i)` for i in [0, n) on up to `parallelism` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t parallelism, Fn&& fn) {
  parallelism = std::max<std::size_t>(1, std::min(parallelism, n));
  if (parallelism == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  workers.reserve(parallelism);
  for (std::size_t t = 0; t < parallelism; ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
}

inline std::vector<std::vector<std::size_t>> rank_examples(std::span<const EvalExample> examples,
                                                           const CompressionConfig& config, const Backends& backends,
                                                           std::size_t parallelism = 1) {
  std::vector<std::vector<std::size_t>> out(examples.size());
  parallel_for(examples.size(), parallelism,
               [&](std::size_t i) { out[i] = retrieval_ranking(examples[i].bundle, config, backends); });
  return out;
}

struct JobOutcome {
  std::string id;
  std::optional<CompressedPrompt> result;
  std::string error;
};

struct JobAggregate {
  std::size_t n_examples = 0;
  std::size_t n_failed = 0;
  std::size_t total_original_tokens = 0;
  std::size_t total_compressed_tokens = 0;
  double mean_original_tokens = 0.0;
  double mean_compressed_tokens = 0.0;
  double aggregate_inverse_tau = 0.0;  // total original / total compressed
  double mean_inverse_tau = 0.0;       // mean of per-example ratios
};

struct JobResult {
  std::vector<JobOutcome> outcomes;  // input order
  JobAggregate aggregate;
};

inline JobAggregate aggregate_outcomes(const std::vector<JobOutcome>& outcomes) {
  JobAggregate a;
  a.n_examples = outcomes.size();
  std::size_t ok = 0;
  double ratio_sum = 0.0;
  for (const auto& o : outcomes) {
    if (!o.result) {
      ++a.n_failed;
      continue;
    }
    ++ok;
    a.total_original_tokens += o.result->report.original_tokens;
    a.total_compressed_tokens += o.result->report.compressed_tokens;
    ratio_sum += o.result->report.achieved_inverse_tau;
  }
  if (ok > 0) {
    a.mean_original_tokens = static_cast<double>(a.total_original_tokens) / static_cast<double>(ok);
    a.mean_compressed_tokens = static_cast<double>(a.total_compressed_tokens) / static_cast<double>(ok);
    a.mean_inverse_tau = ratio_sum / static_cast<double>(ok);
    a.aggregate_inverse_tau = inverse_ratio(a.total_original_tokens, a.total_compressed_tokens);
  }
  return a;
}

inline nlohmann::json to_json(const JobAggregate& a) {
  return {{"kind", "aggregate"},
          {"n_examples", a.n_examples},
          {"n_failed", a.n_failed},
          {"total_original_tokens", a.total_original_tokens},
          {"total_compressed_tokens", a.total_compressed_tokens},
          {"mean_original_tokens", a.mean_original_tokens},
          {"mean_compressed_tokens", a.mean_compressed_tokens},
          {"aggregate_inverse_tau", finite_or_null(a.aggregate_inverse_tau)},
          {"mean_inverse_tau", finite_or_null(a.mean_inverse_tau)}};
}

/// Compresses every bundle. A failing example is recorded and the rest of
/// the batch continues.
inline JobResult run_job(std::span<const PromptBundle> bundles, const CompressionConfig& config, const Backends& backends,
                         std::size_t parallelism = 1) {
  const auto checked = validate_config(config);
  JobResult job;
  job.outcomes.resize(bundles.size());
  parallel_for(bundles.size(), parallelism, [&](std::size_t i) {
    auto& o = job.outcomes[i];
    o.id = bundles[i].id;
    try {
      o.result = compress(bundles[i], checked, backends);
    } catch (const std::exception& e) {
      o.error = e.what();
    }
  });
  job.aggregate = aggregate_outcomes(job.outcomes);
  return job;
}

/// Report JSONL: one line per input, then the aggregate line.
inline void write_report(std::ostream& out, const JobResult& job) {
  constexpr auto kReplace = nlohmann::json::error_handler_t::replace;
  for (const auto& o : job.outcomes) {
    if (o.result) {
      out << to_json(o.result->report).dump(-1, ' ', false, kReplace) << '\n';
    } else {
      nlohmann::json e{{"kind", "example"}, {"id", o.id}, {"error", o.error}};
      out << e.dump(-1, ' ', false, kReplace) << '\n';
    }
  }
  out << to_json(job.aggregate).dump() << '\n';
}

/// Compressed prompts JSONL, one line per input.
inline void write_outputs(std::ostream& out, const JobResult& job) {
  constexpr auto kReplace = nlohmann::json::error_handler_t::replace;
  for (const auto& o : job.outcomes) {
    nlohmann::json j{{"id", o.id}};
    if (o.result) {
      j["compressed_prompt"] = o.result->text;
      j["compressed_tokens"] = o.result->report.compressed_tokens;
    } else {
      j["error"] = o.error;
    }
    out << j.dump(-1, ' ', false, kReplace) << '\n';
  }
}

struct SweepGrid {
  std::vector<double> tau_o{0.1, 0.2, 0.3};
  std::vector<double> k1{0.2, 0.4, 0.6};
  std::vector<double> k2{0.05, 0.1, 0.2};
};

struct SweepRow {
  double tau_o = 0.0, k1 = 0.0, k2 = 0.0;
  JobAggregate aggregate;
};

/// Runs the job once per (τ_o, k1, k2) grid point.
inline std::vector<SweepRow> sweep(std::span<const PromptBundle> bundles, const CompressionConfig& base,
                                   const SweepGrid& grid, const Backends& backends, std::size_t parallelism = 1) {
  std::vector<SweepRow> rows;
  for (double tau_o : grid.tau_o)
    for (double k1 : grid.k1)
      for (double k2 : grid.k2) {
        auto c = base;
        c.tau_o = tau_o;
        c.k1 = k1;
        c.k2 = k2;
        rows.push_back({tau_o, k1, k2, run_job(bundles, c, backends, parallelism).aggregate});
      }
  return rows;
}

inline std::string format_sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "tau_o\tk1\tk2\tn_examples\tn_failed\tmean_original_tokens\tmean_compressed_tokens\taggregate_inverse_tau\n";
  for (const auto& r : rows) {
    os << detail::format_double(r.tau_o) << '\t' << detail::format_double(r.k1) << '\t' << detail::format_double(r.k2)
       << '\t' << r.aggregate.n_examples << '\t' << r.aggregate.n_failed << '\t'
       << detail::format_double(r.aggregate.mean_original_tokens) << '\t'
       << detail::format_double(r.aggregate.mean_compressed_tokens) << '\t'
       << detail::format_double(r.aggregate.aggregate_inverse_tau) << '\n';
  }
  return os.str();
}

}  // namespace pc
