// SPDX-License-Identifier: Apache-2.0
#pragma once

// HTTP client for the scoring service. Wire format (JSON over HTTP/1.1):
//
//   POST /v1/logprobs            {context, target}        -> {tokens, logprobs, token_count, tokenizer?, log_base?}
//   POST /v1/embeddings          {texts}                  -> {vectors, dim}
//   POST /v1/guiding-questions   {question, n, prompt?}   -> {questions}
//   GET  /healthz                200 once the model is loaded
//
// Responses with fields outside these sets are rejected.

#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <initializer_list>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pc/backend.hpp"

namespace pc {

struct RemoteOptions {
  std::string base_url = "http://127.0.0.1:8080";
  int timeout_ms = 30000;
  int max_retries = 2;
  int backoff_ms = 100;
  std::size_t context_window = 4096;

  /// PC_REMOTE_URL and PC_REMOTE_TIMEOUT_MS override the defaults.
  static RemoteOptions from_env() {
    RemoteOptions o;
    if (const char* url = std::getenv("PC_REMOTE_URL"); url && *url) o.base_url = url;
    if (const char* t = std::getenv("PC_REMOTE_TIMEOUT_MS"); t && *t) o.timeout_ms = std::atoi(t);
    return o;
  }
};

/// The guiding-question request text sent to the generator model.
inline std::string guiding_prompt(std::size_t n, std::string_view question) {
  return "Please provide " + std::to_string(n) + " most helpful guiding questions to address the original question: " +
         std::string(question);
}

/// Extracts items from a generator reply. Lines of the form "3. text" or
/// "3) text" are taken when present; otherwise every non-empty line is an
/// item. At most n items are returned.
inline std::vector<std::string> parse_numbered_list(std::string_view text, std::size_t n) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  std::vector<std::string> numbered, plain;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (!line.empty()) {
      std::size_t d = 0;
      while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
      if (d > 0 && d < line.size() && (line[d] == '.' || line[d] == ')')) {
        auto item = trim(line.substr(d + 1));
        if (!item.empty()) numbered.emplace_back(item);
      } else {
        plain.emplace_back(line);
      }
    }
    if (nl == text.size()) break;
  }
  auto& out = numbered.empty() ? plain : numbered;
  if (out.size() > n) out.resize(n);
  return out;
}

class RemoteClient final : public Scorer, public Embedder, public QuestionGenerator {
 public:
  explicit RemoteClient(RemoteOptions options) : options_(std::move(options)) {}

  const RemoteOptions& options() const noexcept { return options_; }

  bool healthy() const {
    auto cli = make_client();
    auto res = cli.Get("/healthz");
    return res && res->status == 200;
  }

  /// POST with retries on transport failures and 5xx replies, backing off
  /// exponentially. 4xx replies are not retried.
  nlohmann::json remote_call(const std::string& path, const nlohmann::json& request) const {
    const auto body = request.dump();
    ErrorCode last_code = ErrorCode::BackendUnavailable;
    std::string last_message;
    int last_status = 0;
    std::string last_body;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms) * (1 << (attempt - 1)));
      auto cli = make_client();
      auto res = cli.Post(path, body, "application/json");
      if (!res) {
        auto err = res.error();
        last_code = (err == httplib::Error::Read || err == httplib::Error::Write ||
                     err == httplib::Error::ConnectionTimeout)
                        ? ErrorCode::Timeout
                        : ErrorCode::BackendUnavailable;
        last_message = path + ": " + httplib::to_string(err);
        continue;
      }
      if (res->status >= 500) {
        last_code = res->status == 503 ? ErrorCode::BackendUnavailable : ErrorCode::ProtocolError;
        last_status = res->status;
        last_body = res->body;
        last_message = path + " returned " + std::to_string(res->status);
        continue;
      }
      if (res->status == 413) throw Error(ErrorCode::ContextOverflow, path + ": " + res->body);
      if (res->status != 200) throw Error::protocol(res->status, res->body, path + " rejected the request");
      try {
        auto j = nlohmann::json::parse(res->body);
        if (!j.is_object()) throw Error::protocol(res->status, res->body, path + " reply is not an object");
        return j;
      } catch (const nlohmann::json::exception& e) {
        throw Error::protocol(res->status, res->body, path + " reply is not JSON: " + e.what());
      }
    }
    if (last_code == ErrorCode::ProtocolError) throw Error::protocol(last_status, last_body, last_message);
    throw Error(last_code, last_message);
  }

  TokenSeq tokenize(std::string_view text) const override {
    TokenSeq out;
    if (text.empty()) return out;
    auto reply = logprobs("", std::string(text));
    std::size_t offset = 0;
    for (const auto& piece : reply.tokens) {
      const auto len = std::min(piece.size(), text.size() - std::min(offset, text.size()));
      out.push_back(intern(piece), {offset, len});
      offset += len;
    }
    return out;
  }

  std::string detokenize(std::span<const TokenId> tokens) const override {
    std::lock_guard lock(mu_);
    std::string out;
    for (auto id : tokens) {
      if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size())
        throw Error(ErrorCode::OutOfRange, "token id " + std::to_string(id) + " unknown to the remote client");
      out += pieces_[static_cast<std::size_t>(id)];
    }
    return out;
  }
  using Scorer::detokenize;

  std::size_t context_window() const override { return options_.context_window; }

  LogProbVector score_logprobs(std::span<const TokenId> context, std::span<const TokenId> target) const override {
    check_window(*this, context.size(), target.size());
    LogProbVector out;
    if (target.empty()) return out;
    auto reply = logprobs(detokenize(context), detokenize(target));
    if (reply.tokens.size() != target.size())
      throw Error::protocol(200, "", "target re-tokenized to " + std::to_string(reply.tokens.size()) + " tokens, expected " +
                                         std::to_string(target.size()));
    out.values = std::move(reply.logprobs);
    return out;
  }

  EmbeddingVector embed(std::string_view text) const override {
    auto j = remote_call("/v1/embeddings", {{"texts", {std::string(text)}}});
    only_fields(j, {"vectors", "dim"}, "/v1/embeddings");
    if (!j.contains("vectors") || !j["vectors"].is_array() || j["vectors"].size() != 1 || !j["vectors"][0].is_array())
      throw Error::protocol(200, j.dump(), "/v1/embeddings: expected one vector");
    EmbeddingVector v;
    for (const auto& x : j["vectors"][0]) {
      if (!x.is_number() || !std::isfinite(x.get<double>()))
        throw Error::protocol(200, j.dump(), "/v1/embeddings: non-finite component");
      v.values.push_back(x.get<double>());
    }
    if (j.contains("dim") && (!j["dim"].is_number_integer() || j["dim"].get<std::size_t>() != v.values.size()))
      throw Error::protocol(200, j.dump(), "/v1/embeddings: dim does not match vector length");
    return v;
  }

  std::vector<std::string> generate_guiding(std::string_view question, std::size_t n) const override {
    if (n == 0) return {};
    auto j = remote_call("/v1/guiding-questions",
                         {{"question", std::string(question)}, {"n", n}, {"prompt", guiding_prompt(n, question)}});
    only_fields(j, {"questions"}, "/v1/guiding-questions");
    if (!j.contains("questions") || !j["questions"].is_array())
      throw Error::protocol(200, j.dump(), "/v1/guiding-questions: missing questions array");
    std::vector<std::string> out;
    for (const auto& q : j["questions"]) {
      if (!q.is_string()) continue;
      // Items may still carry numbering, or be one unsplit block of text.
      for (auto& item : parse_numbered_list(q.get<std::string>(), n)) {
        if (out.size() == n) break;
        out.push_back(std::move(item));
      }
    }
    return out;
  }

 private:
  struct LogprobReply {
    std::vector<std::string> tokens;
    std::vector<double> logprobs;
  };

  httplib::Client make_client() const {
    httplib::Client cli(options_.base_url);
    const auto sec = options_.timeout_ms / 1000;
    const auto usec = (options_.timeout_ms % 1000) * 1000;
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    return cli;
  }

  static void only_fields(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, const std::string& path) {
    for (const auto& [key, _] : j.items()) {
      bool ok = false;
      for (auto a : allowed) ok = ok || key == a;
      if (!ok) throw Error::protocol(200, j.dump(), path + ": unexpected field '" + key + "'");
    }
  }

  LogprobReply logprobs(const std::string& context, const std::string& target) const {
    auto j = remote_call("/v1/logprobs", {{"context", context}, {"target", target}});
    only_fields(j, {"tokens", "logprobs", "token_count", "tokenizer", "log_base"}, "/v1/logprobs");
    const auto fail = [&](const std::string& why) { return Error::protocol(200, j.dump(), "/v1/logprobs: " + why); };
    if (!j.contains("tokens") || !j["tokens"].is_array() || !j.contains("logprobs") || !j["logprobs"].is_array())
      throw fail("tokens and logprobs arrays are required");
    if (j.contains("log_base") && j["log_base"] != "e") throw fail("log_base must be \"e\"");
    LogprobReply r;
    for (const auto& t : j["tokens"]) {
      if (!t.is_string()) throw fail("token is not a string");
      r.tokens.push_back(t.get<std::string>());
    }
    for (const auto& v : j["logprobs"]) {
      if (!v.is_number() || !std::isfinite(v.get<double>())) throw fail("log-probability is not finite");
      r.logprobs.push_back(v.get<double>());
    }
    if (r.tokens.size() != r.logprobs.size()) throw fail("tokens and logprobs differ in length");
    if (j.contains("token_count") && (!j["token_count"].is_number_integer() ||
                                      j["token_count"].get<std::size_t>() != r.tokens.size()))
      throw fail("token_count does not match");
    return r;
  }

  TokenId intern(const std::string& piece) const {
    std::lock_guard lock(mu_);
    auto [it, inserted] = ids_.try_emplace(piece, static_cast<TokenId>(pieces_.size()));
    if (inserted) pieces_.push_back(piece);
    return it->second;
  }

  RemoteOptions options_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, TokenId> ids_;
  mutable std::vector<std::string> pieces_;
};

}  // namespace pc
