// Copyright 2026 The SEHM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// sehm: experiment driver. Every subcommand writes its artifacts and a
// manifest.json under --out.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sehm/harness.h"
#include "sehm/io.h"
#include "sehm/selfcheck.h"
#include "sehm/training.h"

#ifndef SEHM_VERSION
#define SEHM_VERSION "0.0.0"
#endif
#ifndef SEHM_GIT_REVISION
#define SEHM_GIT_REVISION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string out = "out";
  std::optional<uint64_t> seed;
  std::optional<int64_t> workers;
  std::string data;
  std::string model;
  std::vector<std::string> ids;
  int64_t limit = 10;
};

// FNV-1a over the file bytes; enough to tell inputs apart in a manifest.
std::string fnv1a(const std::string& path) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : sehm::read_text(path)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class Run {
 public:
  Run(std::string command, const Options& opt, int argc, char** argv) : command_(std::move(command)), opt_(opt) {
    for (int i = 0; i < argc; ++i) args_.push_back(argv[i]);
    if (!opt_.config.empty()) add_input(opt_.config);
    config_ = opt_.config.empty() ? sehm::parse_config("{}", opt_.sets) : sehm::load_config(opt_.config, opt_.sets);
    if (opt_.seed) {
      config_.data.seed = *opt_.seed;
      config_.model.seed = *opt_.seed;
      config_.train.seed = *opt_.seed;
      config_.train.split_seed = *opt_.seed;
      config_.evaluate.seed = *opt_.seed;
    }
    if (opt_.workers) config_.ablate.workers = *opt_.workers;
    config_.validate();
    fs::create_directories(opt_.out);
  }

  sehm::ExperimentConfig& config() { return config_; }

  std::string path(const std::string& name) const { return (fs::path(opt_.out) / name).string(); }

  void add_input(const std::string& p) { inputs_.push_back({{"path", p}, {"fnv1a64", fnv1a(p)}}); }

  void write(const std::string& name, const std::string& text) {
    sehm::write_text(path(name), text);
    outputs_.push_back(name);
  }
  void wrote(const std::string& name) { outputs_.push_back(name); }

  // Input dataset, or a fresh synthetic one from the data section.
  sehm::Dataset dataset() {
    if (opt_.data.empty()) return sehm::generate_synthetic(config_.data);
    add_input(opt_.data);
    return sehm::read_dataset(opt_.data);
  }

  void finish() {
    json m;
    m["command"] = command_;
    m["args"] = args_;
    m["version"] = SEHM_VERSION;
    m["git_revision"] = SEHM_GIT_REVISION;
    m["seeds"] = {{"data", config_.data.seed},         {"model", config_.model.seed},
                  {"train", config_.train.seed},       {"split", config_.train.split_seed},
                  {"evaluate", config_.evaluate.seed}};
    m["config"] = json::parse(sehm::config_json(config_));
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    sehm::write_text(path("manifest.json"), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  Options opt_;
  std::vector<std::string> args_;
  sehm::ExperimentConfig config_;
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
};

int generate_data(Run& run) {
  const sehm::Dataset data = sehm::generate_synthetic(run.config().data);
  sehm::write_dataset(run.path("data.jsonl"), data);
  run.wrote("data.jsonl");
  return 0;
}

int train(Run& run) {
  const sehm::Dataset data = run.dataset();
  auto& c = run.config();
  const sehm::PreparedData prepared = sehm::prepare(data, c.train);
  const sehm::TrainResult result = sehm::train(c.model, prepared, c.train);
  sehm::save_bundle(run.path("model.bin"), result.model, result.theta ? &*result.theta : nullptr);
  run.wrote("model.bin");
  run.write("history.csv", sehm::history_csv(result.history));
  run.write("timing.csv", sehm::timing_csv(result.history));
  run.write("config.json", sehm::config_json(c));
  return 0;
}

sehm::ModelBundle load_model(Run& run, const Options& opt) {
  if (opt.model.empty()) throw sehm::SehmError("--model is required");
  run.add_input(opt.model);
  return sehm::load_bundle(opt.model);
}

int evaluate(Run& run, const Options& opt) {
  const sehm::ModelBundle bundle = load_model(run, opt);
  const sehm::Dataset data = run.dataset();
  const sehm::PreparedData prepared = sehm::prepare(data, run.config().train);
  const sehm::MetricsReport report =
      sehm::evaluate(bundle.model, bundle.theta ? &*bundle.theta : nullptr, prepared, run.config().evaluate);
  run.write("report.json", sehm::report_json(report));
  return 0;
}

int explain(Run& run, const Options& opt) {
  const sehm::ModelBundle bundle = load_model(run, opt);
  if (!bundle.theta) throw sehm::SehmError(opt.model + ": bundle has no theta network");
  const sehm::Dataset data = run.dataset();
  const sehm::PreparedData prepared = sehm::prepare(data, run.config().train);

  // Explicit ids, else the leading test samples.
  std::vector<int64_t> rows;
  if (!opt.ids.empty()) {
    for (const std::string& id : opt.ids) {
      const auto it = std::find(data.ids.begin(), data.ids.end(), id);
      if (it == data.ids.end()) throw sehm::SehmError("unknown sample id '" + id + "'");
      rows.push_back(it - data.ids.begin());
    }
  } else {
    for (int64_t r : prepared.split.test) {
      if (static_cast<int64_t>(rows.size()) == opt.limit) break;
      rows.push_back(r);
    }
  }
  const sehm::Dataset picked = data.subset(rows);
  const sehm::Tensor x = prepared.standardizer.apply(picked, run.config().train.zero_encoding);
  const int64_t t_len = picked.length(), d = picked.variables();
  fs::create_directories(run.path("explanations"));
  for (int64_t i = 0; i < picked.size(); ++i) {
    const sehm::Tensor series({t_len, d}, std::vector<double>(x.data().begin() + i * t_len * d,
                                                              x.data().begin() + (i + 1) * t_len * d));
    const sehm::Explanation e = sehm::explain(bundle.model, *bundle.theta, series, picked.sample_mask(i));
    const std::string name = "explanations/" + picked.ids[static_cast<size_t>(i)] + ".csv";
    sehm::write_explanation_csv(run.path(name), e, picked.sample_values(i), picked.variable_names);
    run.wrote(name);
  }
  return 0;
}

int benchmark(Run& run) {
  const sehm::Dataset data = run.dataset();
  const auto& c = run.config();
  const sehm::PreparedData prepared = sehm::prepare(data, c.train);
  run.write("benchmark.csv", sehm::benchmark_csv(sehm::benchmark_neighbor_size(c.model, prepared, c.train, c.benchmark)));
  return 0;
}

int ablate(Run& run) {
  const sehm::Dataset data = run.dataset();
  const auto& c = run.config();
  run.write("ablation.csv", sehm::ablation_csv(sehm::ablation_run(c.model, data, c.train, c.ablate)));
  return 0;
}

int selfcheck(Run& run) {
  const std::vector<sehm::CheckResult> results = sehm::run_selfcheck(run.config().train.seed);
  json j = json::array();
  int failed = 0;
  for (const sehm::CheckResult& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << "\n";
    j.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    failed += r.passed ? 0 : 1;
  }
  run.write("selfcheck.json", j.dump(2) + "\n");
  std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-explaining hybrid model for long time series with gaps"};
  app.set_version_flag("--version", std::string(SEHM_VERSION) + " (" + SEHM_GIT_REVISION + ")");
  app.require_subcommand(1);
  Options opt;

  const auto common = [&opt](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--set", opt.sets, "Override one value, section.key=value (repeatable)");
    sub->add_option("-o,--out", opt.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Seed for data, model, training, split and evaluation");
    sub->add_option("--workers", opt.workers, "Parallel runs in ablate")->check(CLI::PositiveNumber);
  };
  const auto data_flag = [&opt](CLI::App* sub) {
    sub->add_option("--data", opt.data, "Dataset (JSONL); generated from the config when omitted")
        ->check(CLI::ExistingFile);
  };
  const auto model_flag = [&opt](CLI::App* sub) {
    sub->add_option("--model", opt.model, "Model bundle written by train")->required()->check(CLI::ExistingFile);
  };

  CLI::App* gen = app.add_subcommand("generate-data", "Write a synthetic dataset");
  common(gen);
  CLI::App* tr = app.add_subcommand("train", "Train a model and its explainer");
  common(tr);
  data_flag(tr);
  CLI::App* ev = app.add_subcommand("evaluate", "Predictive and interpretability metrics on the test split");
  common(ev);
  data_flag(ev);
  model_flag(ev);
  CLI::App* ex = app.add_subcommand("explain", "Per-sample contribution tables");
  common(ex);
  data_flag(ex);
  model_flag(ex);
  ex->add_option("--id", opt.ids, "Sample id to explain (repeatable)");
  ex->add_option("--limit", opt.limit, "Test samples explained when no --id is given")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  CLI::App* bm = app.add_subcommand("benchmark", "Epoch time against neighbor size");
  common(bm);
  data_flag(bm);
  CLI::App* ab = app.add_subcommand("ablate", "Locality, zero-encoding and kernelization grid");
  common(ab);
  data_flag(ab);
  CLI::App* sc = app.add_subcommand("selfcheck", "Run the invariant suite");
  common(sc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "sehm: " << e.what() << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    Run run(sub->get_name(), opt, argc, argv);
    int status = 0;
    if (sub == gen) status = generate_data(run);
    else if (sub == tr) status = train(run);
    else if (sub == ev) status = evaluate(run, opt);
    else if (sub == ex) status = explain(run, opt);
    else if (sub == bm) status = benchmark(run);
    else if (sub == ab) status = ablate(run);
    else status = selfcheck(run);
    run.finish();
    return status;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg) {
      if (ch == '\n') ch = ' ';
    }
    std::cerr << "sehm " << sub->get_name() << ": " << msg << "\n";
    return 1;
  }
}
