// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pc/allocator.hpp"
#include "pc/types.hpp"

namespace pc {

struct SegmentCount {
  std::size_t segment = 0;
  Origin origin;
  std::size_t n_kit = 0;
  std::size_t n_nit = 0;
  bool operator==(const SegmentCount&) const = default;
};

struct CompressionReport {
  std::string id;
  std::vector<std::size_t> retained_demo_indices;            // input indices, output order
  std::vector<std::pair<std::size_t, double>> per_demo_rk;   // every demo, by input index
  std::vector<std::pair<std::size_t, DemoRatios>> per_demo_tau;  // retained demos, output order
  double tau_dems = 0.0;
  std::vector<SegmentCount> per_segment_counts;
  std::size_t original_tokens = 0;
  std::size_t compressed_tokens = 0;
  double achieved_inverse_tau = 0.0;
  std::vector<std::string> warnings;
};

inline double inverse_ratio(std::size_t original, std::size_t compressed) {
  if (compressed == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(original) / static_cast<double>(compressed);
}

// Non-finite ratios are written as null.
inline nlohmann::json finite_or_null(double v) {
  if (v != v || v == std::numeric_limits<double>::infinity() || v == -std::numeric_limits<double>::infinity())
    return nullptr;
  return v;
}

inline nlohmann::json to_json(const CompressionReport& r) {
  using nlohmann::json;
  json j;
  j["kind"] = "example";
  j["id"] = r.id;
  j["retained_demo_indices"] = r.retained_demo_indices;
  json rk = json::array();
  for (const auto& [k, v] : r.per_demo_rk) rk.push_back({{"index", k}, {"rk", v}});
  j["per_demo_rk"] = std::move(rk);
  json tau = json::array();
  for (const auto& [k, d] : r.per_demo_tau) tau.push_back({{"index", k}, {"tau_dems", d.tau_dems}, {"tau_o", d.tau_o}});
  j["per_demo_tau"] = std::move(tau);
  j["tau_dems"] = r.tau_dems;
  json segs = json::array();
  for (const auto& s : r.per_segment_counts) {
    json e{{"segment", s.segment}, {"origin", to_string(s.origin.kind)}, {"n_kit", s.n_kit}, {"n_nit", s.n_nit}};
    if (s.origin.kind == Origin::Kind::Demonstration) {
      e["demo_rank"] = s.origin.demo_rank;
      e["demo_index"] = s.origin.demo_index;
    }
    segs.push_back(std::move(e));
  }
  j["per_segment_counts"] = std::move(segs);
  j["original_tokens"] = r.original_tokens;
  j["compressed_tokens"] = r.compressed_tokens;
  j["achieved_inverse_tau"] = finite_or_null(r.achieved_inverse_tau);
  j["warnings"] = r.warnings;
  return j;
}

}  // namespace pc
