// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command-line front end: compress, eval-recall, sweep, synth.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pc/config.hpp"
#include "pc/dataset.hpp"
#include "pc/harness.hpp"
#include "pc/remote_client.hpp"
#include "pc/synthetic.hpp"
#include "pc/toy_backends.hpp"

namespace pc::cli {

struct CommonOptions {
  std::string config_path;
  double tau = 0, tau_ins = 0, tau_q = 0, tau_o = 0, k1 = 0, k2 = 0, mu = 0;
  long long segment_size = 0, n_guiding = 0;
  std::string strategy;
  std::string restrict_text;
  bool eq8_literal = false;
  std::string backend = "toy";
  std::string remote_url;
  int remote_timeout_ms = 0;
  std::string toy_corpus;
  double toy_cache_weight = 0.5;
  std::size_t parallel = 1;
  std::string input = "-";
  std::string output = "-";

  std::vector<std::pair<CLI::Option*, std::function<void(ConfigOverrides&)>>> setters;
  CLI::Option* eq8_flag = nullptr;
  CLI::Option* url_opt = nullptr;
  CLI::Option* timeout_opt = nullptr;
};

inline void add_common(CLI::App& cmd, CommonOptions& o) {
  cmd.add_option("--config", o.config_path, "key=value config file");
  auto num = [&](const char* flag, double& dst, std::optional<double> ConfigOverrides::* field, const char* help) {
    auto* opt = cmd.add_option(flag, dst, help);
    o.setters.emplace_back(opt, [&dst, field](ConfigOverrides& c) { c.*field = dst; });
  };
  num("--tau", o.tau, &ConfigOverrides::tau, "target retention fraction (ratio 1/tau)");
  num("--tau-ins", o.tau_ins, &ConfigOverrides::tau_ins, "instruction retention fraction");
  num("--tau-q", o.tau_q, &ConfigOverrides::tau_q, "question retention fraction");
  num("--tau-o", o.tau_o, &ConfigOverrides::tau_o, "open-book fraction");
  num("--k1", o.k1, &ConfigOverrides::k1, "retention slope");
  num("--k2", o.k2, &ConfigOverrides::k2, "open-book slope");
  num("--mu", o.mu, &ConfigOverrides::mu, "coarse budget coefficient");
  auto* seg = cmd.add_option("--segment-size", o.segment_size, "tokens per segment");
  o.setters.emplace_back(seg, [&o](ConfigOverrides& c) { c.segment_size = o.segment_size; });
  auto* ng = cmd.add_option("--n-guiding", o.n_guiding, "number of guiding questions");
  o.setters.emplace_back(ng, [&o](ConfigOverrides& c) { c.n_guiding = o.n_guiding; });
  auto* st = cmd.add_option("--strategy", o.strategy, "semi_guided | contrast_only | perplexity_only")
                 ->check(CLI::IsMember({"semi_guided", "contrast_only", "perplexity_only"}));
  o.setters.emplace_back(st, [&o](ConfigOverrides& c) { c.strategy = o.strategy; });
  auto* rt = cmd.add_option("--restrict-text", o.restrict_text, "text appended to every condition text");
  o.setters.emplace_back(rt, [&o](ConfigOverrides& c) { c.restrict_text = o.restrict_text; });
  o.eq8_flag = cmd.add_flag("--eq8-literal", o.eq8_literal, "use the deletion-share form of the base demo ratio");
  cmd.add_option("--backend", o.backend, "toy | remote")->check(CLI::IsMember({"toy", "remote"}));
  o.url_opt = cmd.add_option("--remote-url", o.remote_url, "scoring service base URL (env PC_REMOTE_URL)");
  o.timeout_opt = cmd.add_option("--remote-timeout-ms", o.remote_timeout_ms, "request timeout (env PC_REMOTE_TIMEOUT_MS)");
  cmd.add_option("--toy-corpus", o.toy_corpus, "training text for the toy LM, one document per line (default: the input)");
  cmd.add_option("--toy-cache-weight", o.toy_cache_weight, "unigram cache weight of the toy LM")
      ->check(CLI::Range(0.0, 0.999999));
  cmd.add_option("--parallel", o.parallel, "examples processed concurrently")->check(CLI::PositiveNumber);
  cmd.add_option("--input", o.input, "input JSONL path or -");
  cmd.add_option("--output", o.output, "output path or -");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CompressionConfig resolve_config(const CommonOptions& o) {
  ConfigOverrides merged;
  if (!o.config_path.empty()) merged = parse_config(read_file(o.config_path));
  ConfigOverrides flags;
  for (const auto& [opt, set] : o.setters)
    if (opt->count() > 0) set(flags);
  if (o.eq8_flag->count() > 0) flags.eq8_literal = true;
  merged.merge(flags);
  return validate_config(merged);
}

/// Owns whichever backend set the flags ask for.
class BackendHolder {
 public:
  BackendHolder(const CommonOptions& o, const CompressionConfig& config, const std::vector<PromptBundle>& bundles) {
    if (o.backend == "remote") {
      auto opts = RemoteOptions::from_env();
      if (o.url_opt->count() > 0) opts.base_url = o.remote_url;
      if (o.timeout_opt->count() > 0) opts.timeout_ms = o.remote_timeout_ms;
      opts.context_window = config.context_window;
      remote_ = std::make_unique<RemoteClient>(opts);
      return;
    }
    std::vector<std::string> corpus;
    if (!o.toy_corpus.empty()) {
      std::istringstream in(read_file(o.toy_corpus));
      for (std::string line; std::getline(in, line);)
        if (!line.empty()) corpus.push_back(line);
    } else {
      corpus = bundle_texts(bundles);
    }
    corpus.push_back(config.restrict_text);
    toy_ = std::make_unique<ToyBackendSet>(corpus, o.toy_cache_weight);
  }

  Backends backends() const {
    if (remote_) return Backends{*remote_, *remote_, remote_.get()};
    return toy_->backends();
  }

 private:
  std::unique_ptr<ToyBackendSet> toy_;
  std::unique_ptr<RemoteClient> remote_;
};

/// Writes to a file, or to `fallback` for "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw Error(ErrorCode::ParseError, "cannot write " + path);
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

template <typename Loader>
auto load_input(const std::string& path, std::istream& in, Loader&& loader) {
  if (path == "-") return loader(in);
  auto f = detail::open_input(path);
  return loader(f);
}

inline int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Question-aware prompt compression"};
  app.require_subcommand(1);

  CommonOptions compress_opts, recall_opts, sweep_opts;
  std::string report_path;
  auto* compress_cmd = app.add_subcommand("compress", "compress every bundle of a JSONL file");
  add_common(*compress_cmd, compress_opts);
  compress_cmd->add_option("--report", report_path, "report JSONL path");

  std::size_t k_max = 0;
  std::string external_rankings;
  auto* recall_cmd = app.add_subcommand("eval-recall", "recall@k of the demonstration ranking");
  add_common(*recall_cmd, recall_opts);
  recall_cmd->add_option("--k-max", k_max, "largest k (default: most demonstrations in any example)");
  recall_cmd->add_option("--external-rankings", external_rankings,
                         "JSONL of {\"id\", \"ranking\": [indices]} to score alongside");

  std::string tau_o_grid = "0.1,0.2,0.3", k1_grid = "0.2,0.4,0.6", k2_grid = "0.05,0.1,0.2";
  auto* sweep_cmd = app.add_subcommand("sweep", "grid over tau_o, k1, k2; prints a TSV table");
  add_common(*sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--tau-o-grid", tau_o_grid, "comma-separated tau_o values");
  sweep_cmd->add_option("--k1-grid", k1_grid, "comma-separated k1 values");
  sweep_cmd->add_option("--k2-grid", k2_grid, "comma-separated k2 values");

  synthetic::Options synth;
  std::string synth_output = "-";
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic retrieval corpus as JSONL");
  synth_cmd->add_option("--n-examples", synth.n_examples, "number of bundles");
  synth_cmd->add_option("--n-demos", synth.n_demos, "demonstrations per bundle")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--demo-words", synth.demo_words, "words per demonstration")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--output", synth_output, "output path or -");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*compress_cmd) {
      auto config = resolve_config(compress_opts);
      auto bundles = load_input(compress_opts.input, in, [](std::istream& s) { return load_bundles(s); });
      BackendHolder holder(compress_opts, config, bundles);
      auto job = run_job(bundles, config, holder.backends(), compress_opts.parallel);
      Sink sink(compress_opts.output, out);
      write_outputs(sink.stream(), job);
      if (!report_path.empty()) {
        Sink report(report_path, out);
        write_report(report.stream(), job);
      }
      for (const auto& o : job.outcomes) {
        if (!o.result) err << "example " << o.id << " failed: " << o.error << '\n';
        else
          for (const auto& w : o.result->report.warnings) err << "example " << o.id << ": " << w << '\n';
      }
      err << to_json(job.aggregate).dump() << '\n';
      return job.aggregate.n_examples > 0 && job.aggregate.n_failed == job.aggregate.n_examples ? 1 : 0;
    }

    if (*recall_cmd) {
      auto config = resolve_config(recall_opts);
      auto examples = load_input(recall_opts.input, in, [](std::istream& s) { return load_dataset(s); });
      std::vector<PromptBundle> bundles;
      for (const auto& e : examples) bundles.push_back(e.bundle);
      if (k_max == 0)
        for (const auto& b : bundles) k_max = std::max(k_max, b.demonstrations.size());
      BackendHolder holder(recall_opts, config, bundles);
      auto rankings = rank_examples(examples, config, holder.backends(), recall_opts.parallel);
      auto j = to_json(recall_at_k(examples, rankings, k_max));
      if (!external_rankings.empty()) {
        std::map<std::string, std::vector<std::size_t>> by_id;
        auto f = detail::open_input(external_rankings);
        detail::for_each_record(f, [&](const nlohmann::json& r, long line) {
          if (!r.contains("id") || !r["id"].is_string() || !r.contains("ranking") || !r["ranking"].is_array())
            throw Error::at_line(ErrorCode::ParseError, line, "expected {\"id\": str, \"ranking\": [int]}");
          by_id[r["id"].get<std::string>()] = r["ranking"].get<std::vector<std::size_t>>();
        });
        std::vector<std::vector<std::size_t>> ext;
        for (const auto& e : examples) ext.push_back(by_id[e.bundle.id]);
        j["external"] = to_json(recall_at_k(examples, ext, k_max));
      }
      Sink sink(recall_opts.output, out);
      sink.stream() << j.dump(2) << '\n';
      return 0;
    }

    if (*sweep_cmd) {
      auto config = resolve_config(sweep_opts);
      auto bundles = load_input(sweep_opts.input, in, [](std::istream& s) { return load_bundles(s); });
      auto parse_grid = [](const std::string& s, const char* name) {
        std::vector<double> v;
        std::stringstream ss(s);
        for (std::string item; std::getline(ss, item, ',');) {
          double x = 0;
          auto t = detail::trim(item);
          auto res = std::from_chars(t.data(), t.data() + t.size(), x);
          if (res.ec != std::errc() || res.ptr != t.data() + t.size())
            throw Error::out_of_range(name, "bad grid value '" + item + "'");
          v.push_back(x);
        }
        return v;
      };
      SweepGrid grid{parse_grid(tau_o_grid, "tau_o"), parse_grid(k1_grid, "k1"), parse_grid(k2_grid, "k2")};
      BackendHolder holder(sweep_opts, config, bundles);
      auto rows = sweep(bundles, config, grid, holder.backends(), sweep_opts.parallel);
      Sink sink(sweep_opts.output, out);
      sink.stream() << format_sweep_table(rows);
      return 0;
    }

    if (*synth_cmd) {
      Sink sink(synth_output, out);
      write_bundles(sink.stream(), synthetic::make_corpus(synth));
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace pc::cli
