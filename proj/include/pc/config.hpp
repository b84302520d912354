// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "pc/error.hpp"

namespace pc {

enum class Strategy { SemiGuided, ContrastOnly, PerplexityOnly };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::SemiGuided: return "semi_guided";
    case Strategy::ContrastOnly: return "contrast_only";
    case Strategy::PerplexityOnly: return "perplexity_only";
  }
  return "unknown";
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
  if (s == "semi_guided") return Strategy::SemiGuided;
  if (s == "contrast_only") return Strategy::ContrastOnly;
  if (s == "perplexity_only") return Strategy::PerplexityOnly;
  return std::nullopt;
}

inline constexpr const char* kDefaultRestrictText =
    "We can get the answer to this question in the given documents.";

/// Every knob of a compression job. Fractions are retention fractions: `tau`
/// is the share of the original tokens to keep, so the reported compression
/// ratio is 1/tau.
struct CompressionConfig {
  double tau = 0.5;
  double tau_ins = 0.95;
  double tau_q = 0.9;
  double tau_o = 0.2;
  double k1 = 0.4;
  double k2 = 0.1;
  double mu = 1.1;
  std::size_t segment_size = 200;
  std::size_t n_guiding = 3;
  Strategy strategy = Strategy::SemiGuided;
  std::string restrict_text = kDefaultRestrictText;
  std::size_t context_window = 4096;
  // Evaluate the base demonstration ratio with the printed numerator, which
  // yields the deletion share instead of the retention share.
  bool eq8_literal = false;

  bool operator==(const CompressionConfig&) const = default;
};

/// Partial configuration: absent fields fall back to the defaults above.
/// Integer fields are signed so that negative input can be rejected.
struct ConfigOverrides {
  std::optional<double> tau, tau_ins, tau_q, tau_o, k1, k2, mu;
  std::optional<long long> segment_size, n_guiding, context_window;
  std::optional<std::string> strategy;
  std::optional<std::string> restrict_text;
  std::optional<bool> eq8_literal;

  /// Fields set in `other` win.
  void merge(const ConfigOverrides& other) {
    auto take = [](auto& dst, const auto& src) {
      if (src) dst = src;
    };
    take(tau, other.tau);
    take(tau_ins, other.tau_ins);
    take(tau_q, other.tau_q);
    take(tau_o, other.tau_o);
    take(k1, other.k1);
    take(k2, other.k2);
    take(mu, other.mu);
    take(segment_size, other.segment_size);
    take(n_guiding, other.n_guiding);
    take(context_window, other.context_window);
    take(strategy, other.strategy);
    take(restrict_text, other.restrict_text);
    take(eq8_literal, other.eq8_literal);
  }
};

namespace detail {

inline void check_fraction(const char* field, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw Error::out_of_range(field, "must lie in [0,1]");
}

inline void check_slope(const char* field, double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw Error::out_of_range(field, "must be a finite value >= 0");
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    // Edge spaces are escaped so that value trimming cannot eat them.
    if (c == ' ' && (i == 0 || i + 1 == s.size())) out += "\\s";
    else if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else if (c == '\r') out += "\\r";
    else if (c == '\t') out += "\\t";
    else out += c;
  }
  return out;
}

inline std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      char n = s[++i];
      out += n == 'n' ? '\n' : n == 'r' ? '\r' : n == 't' ? '\t' : n == 's' ? ' ' : n;
    } else {
      out += s[i];
    }
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Checks every field invariant and returns the config unchanged.
inline CompressionConfig validate_config(const CompressionConfig& c) {
  detail::check_fraction("tau", c.tau);
  detail::check_fraction("tau_ins", c.tau_ins);
  detail::check_fraction("tau_q", c.tau_q);
  detail::check_fraction("tau_o", c.tau_o);
  detail::check_slope("k1", c.k1);
  detail::check_slope("k2", c.k2);
  if (!(c.mu >= 1.0) || !std::isfinite(c.mu)) throw Error::out_of_range("mu", "must be a finite value >= 1");
  if (c.segment_size == 0) throw Error::out_of_range("segment_size", "must be > 0");
  if (c.context_window <= c.segment_size) throw Error::out_of_range("context_window", "must exceed segment_size");
  return c;
}

/// Fills defaults for absent fields, then validates.
inline CompressionConfig validate_config(const ConfigOverrides& raw) {
  CompressionConfig c;
  if (raw.tau) c.tau = *raw.tau;
  if (raw.tau_ins) c.tau_ins = *raw.tau_ins;
  if (raw.tau_q) c.tau_q = *raw.tau_q;
  if (raw.tau_o) c.tau_o = *raw.tau_o;
  if (raw.k1) c.k1 = *raw.k1;
  if (raw.k2) c.k2 = *raw.k2;
  if (raw.mu) c.mu = *raw.mu;
  if (raw.segment_size) {
    if (*raw.segment_size <= 0) throw Error::out_of_range("segment_size", "must be > 0");
    c.segment_size = static_cast<std::size_t>(*raw.segment_size);
  }
  if (raw.n_guiding) {
    if (*raw.n_guiding < 0) throw Error::out_of_range("n_guiding", "must be >= 0");
    c.n_guiding = static_cast<std::size_t>(*raw.n_guiding);
  }
  if (raw.context_window) {
    if (*raw.context_window <= 0) throw Error::out_of_range("context_window", "must be > 0");
    c.context_window = static_cast<std::size_t>(*raw.context_window);
  }
  if (raw.strategy) {
    auto s = parse_strategy(*raw.strategy);
    if (!s) throw Error::out_of_range("strategy", "unknown strategy '" + *raw.strategy + "'");
    c.strategy = *s;
  }
  if (raw.restrict_text) c.restrict_text = *raw.restrict_text;
  if (raw.eq8_literal) c.eq8_literal = *raw.eq8_literal;
  return validate_config(c);
}

/// key=value lines in a fixed field order. Doubles use the shortest form that
/// round-trips, so serialize(parse(serialize(c))) is byte-identical.
inline std::string serialize_config(const CompressionConfig& c) {
  std::ostringstream os;
  os << "tau=" << detail::format_double(c.tau) << '\n'
     << "tau_ins=" << detail::format_double(c.tau_ins) << '\n'
     << "tau_q=" << detail::format_double(c.tau_q) << '\n'
     << "tau_o=" << detail::format_double(c.tau_o) << '\n'
     << "k1=" << detail::format_double(c.k1) << '\n'
     << "k2=" << detail::format_double(c.k2) << '\n'
     << "mu=" << detail::format_double(c.mu) << '\n'
     << "segment_size=" << c.segment_size << '\n'
     << "n_guiding=" << c.n_guiding << '\n'
     << "strategy=" << to_string(c.strategy) << '\n'
     << "restrict_text=" << detail::escape(c.restrict_text) << '\n'
     << "context_window=" << c.context_window << '\n'
     << "eq8_literal=" << (c.eq8_literal ? "true" : "false") << '\n';
  return os.str();
}

/// Parses key=value text. Blank lines and lines starting with '#' are
/// skipped. Unknown keys and unparsable values raise ParseError with the
/// 1-based line number.
inline ConfigOverrides parse_config(std::string_view text) {
  ConfigOverrides out;
  long line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    auto trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') {
      if (nl == text.size()) break;
      continue;
    }
    auto eq = trimmed.find('=');
    if (eq == std::string_view::npos) throw Error::at_line(ErrorCode::ParseError, line_no, "expected key=value");
    auto key = detail::trim(trimmed.substr(0, eq));
    auto value = detail::trim(trimmed.substr(eq + 1));

    auto as_double = [&]() {
      double v = 0;
      auto res = std::from_chars(value.data(), value.data() + value.size(), v);
      if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        throw Error::at_line(ErrorCode::ParseError, line_no, "bad number for " + std::string(key));
      return v;
    };
    auto as_int = [&]() {
      long long v = 0;
      auto res = std::from_chars(value.data(), value.data() + value.size(), v);
      if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        throw Error::at_line(ErrorCode::ParseError, line_no, "bad integer for " + std::string(key));
      return v;
    };

    if (key == "tau") out.tau = as_double();
    else if (key == "tau_ins") out.tau_ins = as_double();
    else if (key == "tau_q") out.tau_q = as_double();
    else if (key == "tau_o") out.tau_o = as_double();
    else if (key == "k1") out.k1 = as_double();
    else if (key == "k2") out.k2 = as_double();
    else if (key == "mu") out.mu = as_double();
    else if (key == "segment_size") out.segment_size = as_int();
    else if (key == "n_guiding") out.n_guiding = as_int();
    else if (key == "context_window") out.context_window = as_int();
    else if (key == "strategy") out.strategy = std::string(value);
    else if (key == "restrict_text") out.restrict_text = detail::unescape(value);
    else if (key == "eq8_literal") {
      if (value == "true") out.eq8_literal = true;
      else if (value == "false") out.eq8_literal = false;
      else throw Error::at_line(ErrorCode::ParseError, line_no, "eq8_literal must be true or false");
    } else {
      throw Error::at_line(ErrorCode::ParseError, line_no, "unknown key '" + std::string(key) + "'");
    }
    if (nl == text.size()) break;
  }
  return out;
}

}  // namespace pc
