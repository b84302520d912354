// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pc/types.hpp"

namespace pc {

/// A bundle with exactly one gold demonstration, plus any extra record
/// fields as metadata.
struct EvalExample {
  PromptBundle bundle;
  std::size_t gold_index = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

/// One JSONL record:
///   {"id"?: str, "instruction"?: str, "demonstrations": [{"text": str, "is_gold"?: bool}], "question": str}
inline PromptBundle parse_bundle(const nlohmann::json& j, long line, nlohmann::json* extra = nullptr) {
  auto fail = [&](const std::string& why) { return Error::at_line(ErrorCode::ParseError, line, why); };
  if (!j.is_object()) throw fail("record is not an object");
  PromptBundle b;
  if (j.contains("id")) {
    if (!j["id"].is_string()) throw fail("\"id\" must be a string");
    b.id = j["id"].get<std::string>();
  } else {
    b.id = std::to_string(line);
  }
  if (j.contains("instruction")) {
    if (!j["instruction"].is_string()) throw fail("\"instruction\" must be a string");
    b.instruction = j["instruction"].get<std::string>();
  }
  if (!j.contains("question") || !j["question"].is_string()) throw fail("missing string field \"question\"");
  b.question = j["question"].get<std::string>();
  if (b.question.empty()) throw fail("\"question\" is empty");
  if (!j.contains("demonstrations") || !j["demonstrations"].is_array())
    throw fail("missing array field \"demonstrations\"");
  for (const auto& d : j["demonstrations"]) {
    if (!d.is_object() || !d.contains("text") || !d["text"].is_string())
      throw fail("each demonstration needs a string \"text\"");
    Demonstration demo;
    demo.text = d["text"].get<std::string>();
    if (d.contains("is_gold")) {
      if (!d["is_gold"].is_boolean()) throw fail("\"is_gold\" must be a boolean");
      demo.is_gold = d["is_gold"].get<bool>();
    }
    b.demonstrations.push_back(std::move(demo));
  }
  if (b.demonstrations.empty()) throw fail("\"demonstrations\" is empty");
  if (extra) {
    *extra = nlohmann::json::object();
    for (const auto& [k, v] : j.items())
      if (k != "id" && k != "instruction" && k != "question" && k != "demonstrations") (*extra)[k] = v;
  }
  return b;
}

inline nlohmann::json to_json(const PromptBundle& b) {
  nlohmann::json demos = nlohmann::json::array();
  for (const auto& d : b.demonstrations) {
    nlohmann::json e{{"text", d.text}};
    if (d.is_gold) e["is_gold"] = true;
    demos.push_back(std::move(e));
  }
  return {{"id", b.id}, {"instruction", b.instruction}, {"demonstrations", std::move(demos)}, {"question", b.question}};
}

namespace detail {

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error::at_line(ErrorCode::ParseError, line_no, std::string("invalid JSON: ") + e.what());
    }
    fn(j, line_no);
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  return in;
}

}  // namespace detail

inline std::vector<PromptBundle> load_bundles(std::istream& in) {
  std::vector<PromptBundle> out;
  detail::for_each_record(in, [&](const nlohmann::json& j, long line) { out.push_back(parse_bundle(j, line)); });
  return out;
}

inline std::vector<PromptBundle> load_bundles(const std::string& path) {
  auto in = detail::open_input(path);
  return load_bundles(in);
}

/// Like load_bundles, but every record must flag exactly one gold
/// demonstration.
inline std::vector<EvalExample> load_dataset(std::istream& in) {
  std::vector<EvalExample> out;
  detail::for_each_record(in, [&](const nlohmann::json& j, long line) {
    EvalExample ex;
    ex.bundle = parse_bundle(j, line, &ex.metadata);
    std::size_t golds = 0;
    for (std::size_t k = 0; k < ex.bundle.demonstrations.size(); ++k)
      if (ex.bundle.demonstrations[k].is_gold) {
        ex.gold_index = k;
        ++golds;
      }
    if (golds == 0) throw Error::at_line(ErrorCode::MissingGold, line, "no demonstration has is_gold=true");
    if (golds > 1) throw Error::at_line(ErrorCode::MultipleGold, line, std::to_string(golds) + " gold demonstrations");
    out.push_back(std::move(ex));
  });
  return out;
}

inline std::vector<EvalExample> load_dataset(const std::string& path) {
  auto in = detail::open_input(path);
  return load_dataset(in);
}

/// Every text in the bundles, e.g. for training toy backends.
inline std::vector<std::string> bundle_texts(const std::vector<PromptBundle>& bundles) {
  std::vector<std::string> texts;
  for (const auto& b : bundles) {
    if (!b.instruction.empty()) texts.push_back(b.instruction);
    texts.push_back(b.question);
    for (const auto& d : b.demonstrations) texts.push_back(d.text);
  }
  return texts;
}

inline void write_bundles(std::ostream& out, const std::vector<PromptBundle>& bundles) {
  for (const auto& b : bundles) out << to_json(b).dump() << '\n';
}

}  // namespace pc
