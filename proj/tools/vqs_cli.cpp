// Copyright 2026 The VQS Toolkit Authors
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

// Command-line front end. Talks to the toolkit only through the C API.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vqs/vqs.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct OptionSpec {
  const char* name;
  const char* help;
  bool required = false;
  bool multi = false;
};

struct CommandSpec {
  const char* name;
  const char* help;
  std::vector<OptionSpec> options;
  bool needs_data = true;
};

const OptionSpec kSplit{"split", "split file from `split --out`"};
const OptionSpec kPart{"part", "split part to evaluate: train, val or test (default test)"};
const OptionSpec kQuestionFeatures{"question-features", "VQSF question features keyed by question id"};
const OptionSpec kQuestionRepr{"question-repr", "question representation: w, b or wb"};
const OptionSpec kWordVectors{"word-vectors", "word-vector text table"};
const OptionSpec kStopwords{"stopwords", "stopword list for the bag-of-words vocabulary"};
const OptionSpec kBowSize{"bow-size", "bag-of-words vocabulary size (default 1000)"};
const OptionSpec kHidden{"hidden", "hidden width"};
const OptionSpec kEpochs{"epochs", "training epochs (default 15)"};
const OptionSpec kBatch{"batch-size", "mini-batch size (default 16)"};
const OptionSpec kLr{"lr", "Adam learning rate (default 0.001)"};
const OptionSpec kProposals{"proposals", "segments-style JSON of proposals", true};
const OptionSpec kProposalFeatures{"proposal-features", "VQSF features keyed by proposal id", true};
const OptionSpec kPerImage{"proposals-per-image", "proposals used per image (default 25)"};

std::vector<CommandSpec> command_specs() {
  return {
      {"validate", "check dataset invariants; exit 1 when any is violated", {}},
      {"stats", "print dataset statistics as JSON", {}},
      {"split",
       "draw or load a train/val/test image split",
       {{"train", "train images"},
        {"val", "validation images"},
        {"test", "test images"},
        {"lists", "JSON file of published train/val/test image ids"},
        {"out", "where to write the split"}}},
      {"targets",
       "write attention targets as VQSF keyed by question id",
       {{"grid", "grid side (default 14)"}, kSplit, {"part", "restrict to one split part"},
        {"out", "output VQSF file", true}}},
      {"train-attn",
       "train the attention network",
       {kSplit, {"targets", "VQSF attention targets", true},
        {"region-features", "VQSF region features keyed by (image, cell)", true},
        kQuestionFeatures, kQuestionRepr, kWordVectors, kStopwords, kBowSize, kHidden,
        kEpochs, kBatch, kLr, {"out", "checkpoint path", true},
        {"emit-features", "write attention features for every question here"}}},
      {"train-vqa",
       "train the multiple-choice classifier",
       {kSplit, {"features", "VQSF image features keyed by image id", true},
        {"attention-features", "VQSF attention features keyed by question id"},
        kQuestionFeatures, kQuestionRepr, kWordVectors, kStopwords, kBowSize, kHidden,
        kEpochs, kBatch, kLr, {"out", "checkpoint path", true}}},
      {"eval-vqa",
       "multiple-choice accuracy overall and per answer type",
       {kSplit, kPart, {"model", "checkpoint from train-vqa", true},
        {"features", "VQSF image features keyed by image id", true},
        {"attention-features", "VQSF attention features keyed by question id"},
        kQuestionFeatures, kWordVectors, {"scores-out", "write decision values here"}}},
      {"ensemble",
       "tune convex ensemble weights on validation scores",
       {{"val-scores", "validation score files, one per model", true, true},
        {"test-scores", "test score files in the same model order", false, true},
        {"step", "simplex grid step (default 0.05)"}},
       false},
      {"train-qfss",
       "train the proposal aggregator",
       {kSplit, kProposals, kProposalFeatures, kPerImage, kQuestionFeatures, kQuestionRepr,
        kWordVectors, kStopwords, kBowSize, kEpochs, kBatch, kLr,
        {"tau", "fixed threshold instead of tuning on the validation part"},
        {"out", "checkpoint path", true}}},
      {"eval-qfss",
       "predict question-focused masks and report IOU by question type",
       {kSplit, kPart, {"model", "checkpoint from train-qfss", true}, kProposals,
        kProposalFeatures, kPerImage, kQuestionFeatures, kWordVectors,
        {"tau", "threshold (default: the tuned value)"},
        {"out", "write predictions as RLE JSON"}}},
      {"oracle-qfss",
       "upper bound that classifies ground-truth instance segments",
       {kSplit, kPart, {"segment-features", "VQSF features keyed by segment id", true},
        kQuestionFeatures, kQuestionRepr, kWordVectors, kStopwords, kBowSize, kHidden,
        kEpochs, kBatch, kLr, {"out", "write predictions as RLE JSON"},
        {"model-out", "save the classifier here"}}},
      {"serve",
       "run the annotation service",
       {{"log", "submission log (default <data-dir>/submissions.jsonl)"},
        {"image-dir", "directory served as /static/images"},
        {"ui-dir", "directory served as /static"},
        {"host", "bind address (default 127.0.0.1)"},
        {"port", "port (default 0: any free port)"}}},
  };
}

struct UsageError {
  std::string message;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError{"--config: cannot open " + path};
  std::map<std::string, std::string> values;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError{"--config: line " + std::to_string(n) + " of " + path +
                       " is not key=value"};
    }
    std::string key = trim(line.substr(0, eq));
    while (!key.empty() && key[0] == '-') key.erase(0, 1);
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

class Options {
 public:
  Options() {
    if (vqs_options_create(&handle_) != VQS_OK) throw std::bad_alloc();
  }
  ~Options() { vqs_options_free(handle_); }
  Options(const Options&) = delete;
  Options& operator=(const Options&) = delete;

  void set(const std::string& key, const std::string& value) {
    vqs_options_set(handle_, key.c_str(), value.c_str());
  }
  void append(const std::string& key, const std::string& value) {
    vqs_options_append(handle_, key.c_str(), value.c_str());
  }
  const vqs_options* get() const { return handle_; }

 private:
  vqs_options* handle_ = nullptr;
};

int report_failure(vqs_status status) {
  std::cerr << "vqs: error: " << vqs_status_name(status) << ": " << vqs_last_error() << "\n";
  // Malformed option values are usage errors.
  return status == VQS_ERR_INVALID_ARGUMENT ? kExitUsage : kExitFailed;
}

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int serve(const Options& options) {
  vqs_server* server = nullptr;
  if (auto s = vqs_server_create(options.get(), &server); s != VQS_OK) return report_failure(s);
  std::unique_ptr<vqs_server, decltype(&vqs_server_free)> owned(server, vqs_server_free);
  int port = 0;
  if (auto s = vqs_server_start(server, &port); s != VQS_OK) return report_failure(s);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on port " << port << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  vqs_server_stop(server);
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"VQS toolkit: dataset tools, training stages and the annotation service"};
  app.name("vqs");
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string seed;
  std::string data_dir;
  app.add_option("--config", config_path, "key=value file supplying option defaults");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--data-dir", data_dir, "dataset directory")->envname("VQS_DATA_DIR");

  const auto specs = command_specs();
  std::map<std::string, std::map<std::string, std::vector<std::string>>> values;
  std::map<std::string, CLI::App*> commands;
  for (const auto& spec : specs) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    commands[spec.name] = sub;
    for (const auto& opt : spec.options) {
      auto& slot = values[spec.name][opt.name];
      CLI::Option* o = sub->add_option(std::string("--") + opt.name, slot, opt.help);
      if (opt.multi) {
        o->expected(1, -1);
      } else {
        o->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      }
    }
  }

  // CLI11 reports a stray word only as a missing subcommand; name it instead.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" || arg == "--seed" || arg == "--data-dir") {
      ++i;
      continue;
    }
    if (arg.empty() || arg[0] == '-') continue;
    if (!commands.count(arg)) throw UsageError{"unknown subcommand '" + arg + "'"};
    break;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  const CommandSpec* spec = nullptr;
  for (const auto& s : specs) {
    if (commands[s.name]->parsed()) spec = &s;
  }

  std::map<std::string, std::string> config;
  if (!config_path.empty()) config = read_config(config_path);
  auto from_config = [&](const std::string& key) -> std::optional<std::string> {
    auto it = config.find(key);
    if (it == config.end()) return std::nullopt;
    return it->second;
  };

  Options options;
  if (!seed.empty()) {
    options.set("seed", seed);
  } else if (auto v = from_config("seed")) {
    options.set("seed", *v);
  }
  if (data_dir.empty()) data_dir = from_config("data-dir").value_or("");
  if (spec->needs_data) {
    if (data_dir.empty()) throw UsageError{"--data-dir is required (or set VQS_DATA_DIR)"};
    options.set("data-dir", data_dir);
  }
  for (const auto& opt : spec->options) {
    const auto& given = values[spec->name][opt.name];
    std::vector<std::string> chosen = given;
    if (chosen.empty()) {
      if (auto v = from_config(opt.name)) chosen = {*v};
    }
    if (chosen.empty()) {
      if (opt.required) throw UsageError{std::string("--") + opt.name + " is required"};
      continue;
    }
    for (const auto& v : chosen) options.append(opt.name, v);
  }

  if (std::string(spec->name) == "serve") return serve(options);

  int status = 0;
  char* output = nullptr;
  if (auto s = vqs_stage_run(spec->name, options.get(), &status, &output); s != VQS_OK) {
    return report_failure(s);
  }
  std::cout << output;
  vqs_string_free(output);
  return status == 0 ? kExitOk : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "vqs: usage error: " << e.message << "\n";
    return kExitUsage;
  }
}
