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

#include "pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <unordered_map>
#include <unordered_set>

#include "vqs/attention.hpp"
#include "vqs/dataset.hpp"
#include "vqs/error.hpp"
#include "vqs/features.hpp"
#include "vqs/json_io.hpp"
#include "vqs/mask.hpp"
#include "vqs/optim.hpp"
#include "vqs/qfss.hpp"
#include "vqs/text.hpp"
#include "vqs/vqa.hpp"

namespace vqs {

void StageOptions::set(const std::string& key, std::string value) {
  values_[key] = {std::move(value)};
}

void StageOptions::append(const std::string& key, std::string value) {
  values_[key].push_back(std::move(value));
}

std::string StageOptions::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) {
    fail(ErrorCode::kInvalidArgument, "missing required option --" + key);
  }
  return it->second.back();
}

std::string StageOptions::str_or(const std::string& key,
                                 const std::string& fallback) const {
  return has(key) ? str(key) : fallback;
}

const std::vector<std::string>& StageOptions::list(const std::string& key) const {
  static const std::vector<std::string> kEmpty;
  auto it = values_.find(key);
  return it == values_.end() ? kEmpty : it->second;
}

std::uint64_t StageOptions::u64_or(const std::string& key,
                                   std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string text = str(key);
  std::uint64_t value = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    fail(ErrorCode::kInvalidArgument,
         "option --" + key + " expects a non-negative integer, got '" + text + "'");
  }
  return value;
}

std::size_t StageOptions::size_or(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(u64_or(key, fallback));
}

double StageOptions::double_or(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string text = str(key);
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used == text.size() && std::isfinite(value)) return value;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kInvalidArgument,
       "option --" + key + " expects a number, got '" + text + "'");
}

bool StageOptions::flag(const std::string& key) const {
  if (!has(key)) return false;
  const std::string v = str(key);
  if (v.empty() || v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  fail(ErrorCode::kInvalidArgument, "option --" + key + " expects a boolean, got '" + v + "'");
}

bool is_stage(std::string_view name) {
  return std::find(std::begin(kStageNames), std::end(kStageNames), name) !=
         std::end(kStageNames);
}

namespace {

using Records = std::vector<const VqsRecord*>;

Json dump_report(const TrainReport& report) {
  return Json{{"initial_loss", report.initial_loss},
              {"final_loss", report.final_loss},
              {"epoch_loss", report.epoch_loss}};
}

std::string meta_path(const std::string& model) { return model + ".meta.json"; }

Dataset usable_dataset(const StageOptions& o) {
  return drop_flagged(load_dataset(o.str("data-dir")));
}

TrainConfig train_config(const StageOptions& o) {
  TrainConfig c;
  c.batch_size = o.size_or("batch-size", c.batch_size);
  c.epochs = o.size_or("epochs", c.epochs);
  c.seed = o.u64_or("seed", c.seed);
  c.lr = o.double_or("lr", c.lr);
  if (c.batch_size == 0) fail(ErrorCode::kInvalidArgument, "--batch-size must be positive");
  return c;
}

SplitPart parse_part(const std::string& name) {
  if (name == "train") return SplitPart::kTrain;
  if (name == "val") return SplitPart::kVal;
  if (name == "test") return SplitPart::kTest;
  fail(ErrorCode::kInvalidArgument, "unknown split part '" + name + "'");
}

// Records of one split part, or every record when no split file is given.
Records part_records(const Dataset& ds, const StageOptions& o, SplitPart part) {
  if (!o.has("split")) {
    Records all;
    for (const auto& r : ds.records()) all.push_back(&r);
    return all;
  }
  const Split split = split_from_lists(ds, read_json_file(o.str("split")).get<Split>());
  return records_in(ds, split, part);
}

std::unordered_set<std::string> load_stopwords(const StageOptions& o) {
  std::unordered_set<std::string> words;
  if (!o.has("stopwords")) return words;
  std::ifstream in(o.str("stopwords"));
  if (!in) fail(ErrorCode::kIo, "cannot open " + o.str("stopwords"));
  std::string line;
  while (std::getline(in, line)) {
    for (auto& t : tokenize(line)) words.insert(std::move(t));
  }
  return words;
}

std::shared_ptr<const WordVectorTable> word_table(const StageOptions& o) {
  return std::make_shared<WordVectorTable>(load_word_vectors(o.str("word-vectors")));
}

// Question representation: word vectors (w), bag of words (b), both (wb),
// or rows of a precomputed store keyed by question id.
class QuestionEncoder {
 public:
  static QuestionEncoder for_training(const StageOptions& o, const Records& train,
                                      const std::string& default_repr) {
    QuestionEncoder enc;
    enc.repr_ = o.has("question-features") ? "store"
                                            : o.str_or("question-repr", default_repr);
    enc.load(o);
    if (enc.uses_bow()) {
      std::vector<std::string> texts;
      for (const auto* r : train) texts.push_back(r->question);
      enc.vocab_ = build_frequency_vocab(texts, load_stopwords(o),
                                         o.size_or("bow-size", kBowVocabSize));
    }
    return enc;
  }

  static QuestionEncoder from_meta(const StageOptions& o, const Json& meta) {
    QuestionEncoder enc;
    enc.repr_ = meta.at("question_repr").get<std::string>();
    enc.load(o);
    if (enc.uses_bow()) enc.vocab_ = Vocab(meta.at("vocab").get<std::vector<std::string>>());
    return enc;
  }

  Vec encode(const VqsRecord& r) const {
    if (store_) return store_->row_vec(static_cast<std::uint64_t>(r.question_id));
    Vec out;
    if (words_) out = embed_text(r.question, *words_);
    if (uses_bow()) {
      const Vec b = bow_features(r.question, vocab_);
      out.insert(out.end(), b.begin(), b.end());
    }
    return out;
  }

  std::size_t dim() const {
    if (store_) return store_->dim();
    return (words_ ? words_->dim() : 0) + (uses_bow() ? vocab_.size() : 0);
  }

  const std::shared_ptr<const WordVectorTable>& words() const { return words_; }

  Json meta() const {
    Json j{{"question_repr", repr_}};
    if (uses_bow()) j["vocab"] = vocab_.words();
    return j;
  }

 private:
  bool uses_bow() const { return repr_ == "b" || repr_ == "wb"; }

  void load(const StageOptions& o) {
    if (repr_ == "store") {
      store_ = std::make_shared<FeatureStore>(load_feature_store(o.str("question-features")));
    } else if (repr_ == "w" || repr_ == "wb") {
      words_ = word_table(o);
    } else if (repr_ != "b") {
      fail(ErrorCode::kInvalidArgument,
           "--question-repr must be w, b or wb, got '" + repr_ + "'");
    }
  }

  std::string repr_;
  Vocab vocab_;
  std::shared_ptr<const WordVectorTable> words_;
  std::shared_ptr<const FeatureStore> store_;
};

Json read_meta(const std::string& model) { return read_json_file(meta_path(model)); }

void write_model(const std::string& path, const ParamSet& params, const Json& meta) {
  save_checkpoint(path, params);
  write_json_file(meta_path(path), meta);
}

// ---- dataset stages ----

StageResult run_validate(const StageOptions& o) {
  const auto violations = validate(load_dataset(o.str("data-dir")));
  Json j{{"count", violations.size()}, {"violations", violations}};
  return {violations.empty() ? 0 : 1, j.dump(2) + "\n"};
}

StageResult run_stats(const StageOptions& o) {
  return {0, Json(compute_stats(usable_dataset(o))).dump(2) + "\n"};
}

StageResult run_split(const StageOptions& o) {
  const Dataset ds = usable_dataset(o);
  Split split;
  if (o.has("lists")) {
    split = split_from_lists(ds, read_json_file(o.str("lists")).get<Split>());
  } else {
    split = make_split(ds,
                       {o.size_or("train", 0), o.size_or("val", 0), o.size_or("test", 0)},
                       o.u64_or("seed", 0));
  }
  Json j(summarize_split(ds, split));
  if (o.has("out")) {
    write_json_file(o.str("out"), Json(split));
  } else {
    j["split"] = split;
  }
  return {0, j.dump(2) + "\n"};
}

// ---- attention ----

StageResult run_targets(const StageOptions& o) {
  const Dataset ds = usable_dataset(o);
  const int g = static_cast<int>(o.size_or("grid", kDefaultGrid));
  const Records records = o.has("part") ? part_records(ds, o, parse_part(o.str("part")))
                                        : part_records(ds, StageOptions{}, SplitPart::kTrain);
  FeatureStore store(static_cast<std::uint32_t>(g * g));
  for (const auto* r : records) {
    store.add(static_cast<std::uint64_t>(r->question_id),
              std::span<const double>(attention_target(*r, ds, g).cells));
  }
  save_feature_store(store, o.str("out"));
  return {0, Json{{"records", store.size()}, {"grid", g}}.dump(2) + "\n"};
}

int grid_side(std::size_t cells) {
  const auto g = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(cells))));
  if (g == 0 || g * g != cells) {
    fail(ErrorCode::kDimensionMismatch,
         "target dim " + std::to_string(cells) + " is not a square grid");
  }
  return static_cast<int>(g);
}

RegionGrid region_grid(const FeatureStore& regions, Id image_id, int g) {
  RegionGrid grid{g, regions.dim(), {}};
  grid.features.reserve(grid.regions() * grid.dim);
  for (std::size_t cell = 0; cell < grid.regions(); ++cell) {
    const auto row = regions.row(region_key(image_id, cell));
    grid.features.insert(grid.features.end(), row.begin(), row.end());
  }
  return grid;
}

StageResult run_train_attn(const StageOptions& o) {
  const Dataset ds = usable_dataset(o);
  const Records train = part_records(ds, o, SplitPart::kTrain);
  const FeatureStore targets = load_feature_store(o.str("targets"));
  const FeatureStore regions = load_feature_store(o.str("region-features"));
  const int g = grid_side(targets.dim());
  const QuestionEncoder enc = QuestionEncoder::for_training(o, train, "w");

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!targets.contains(static_cast<std::uint64_t>(train[i]->question_id))) {
      fail(ErrorCode::kMissingFeatures,
           "no attention target for question " + std::to_string(train[i]->question_id));
    }
    usable.push_back(i);
  }
  auto example = [&](std::size_t i) {
    const VqsRecord& r = *train[usable[i]];
    const auto t = targets.row(static_cast<std::uint64_t>(r.question_id));
    return AttentionExample{enc.encode(r), region_grid(regions, r.image_id, g),
                            ProbGrid{g, Vec(t.begin(), t.end())}};
  };
  AttentionConfig model;
  model.question_dim = enc.dim();
  model.region_dim = regions.dim();
  model.hidden = o.size_or("hidden", model.hidden);
  model.seed = o.u64_or("seed", 0);
  const auto result = train_attention(usable.size(), example, model, train_config(o));

  Json meta = enc.meta();
  meta["grid"] = g;
  write_model(o.str("out"), result.params, meta);

  Json j{{"examples", usable.size()}, {"report", dump_report(result.report)}};
  if (o.has("emit-features")) {
    FeatureStore x_att(static_cast<std::uint32_t>(regions.dim()));
    for (const auto& r : ds.records()) {
      const auto out = attention_forward(enc.encode(r), region_grid(regions, r.image_id, g),
                                         result.params);
      x_att.add(static_cast<std::uint64_t>(r.question_id), std::span<const double>(out.x_att));
    }
    save_feature_store(x_att, o.str("emit-features"));
    j["emitted"] = x_att.size();
  }
  return {0, j.dump(2) + "\n"};
}

// ---- multiple-choice VQA ----

struct VqaInputs {
  FeatureStore images;
  std::shared_ptr<const WordVectorTable> words;
  std::optional<FeatureStore> attention;
  VqaInputDims dims;
  mutable std::unordered_map<std::string, Vec> answer_cache;

  const Vec& answer(const std::string& text) const {
    auto it = answer_cache.find(text);
    if (it == answer_cache.end()) {
      it = answer_cache.emplace(text, embed_text(text, *words)).first;
    }
    return it->second;
  }
};

VqaInputs load_vqa_inputs(const StageOptions& o, const QuestionEncoder& enc) {
  VqaInputs in{load_feature_store(o.str("features")),
               enc.words() ? enc.words() : word_table(o), std::nullopt, {}, {}};
  if (o.has("attention-features")) {
    in.attention = load_feature_store(o.str("attention-features"));
  }
  in.dims = {in.images.dim(), enc.dim(), in.words->dim(),
             in.attention ? in.attention->dim() : 0};
  return in;
}

std::size_t answer_index(const VqsRecord& r) {
  if (!r.candidates || r.candidates->size() != kNumCandidates) {
    fail(ErrorCode::kIncompleteCandidates,
         "question " + std::to_string(r.question_id) + " lacks " +
             std::to_string(kNumCandidates) + " candidate answers");
  }
  auto it = std::find(r.candidates->begin(), r.candidates->end(), r.answer);
  if (it == r.candidates->end()) {
    fail(ErrorCode::kIncompleteCandidates,
         "answer of question " + std::to_string(r.question_id) + " is not a candidate");
  }
  return static_cast<std::size_t>(it - r.candidates->begin());
}

// Inputs of all 18 candidates of one question.
class QuestionInputs {
 public:
  QuestionInputs(const VqaInputs& in, const QuestionEncoder& enc, const VqsRecord& r)
      : in_(in),
        record_(r),
        image_(in.images.row_vec(static_cast<std::uint64_t>(r.image_id))),
        question_(enc.encode(r)) {
    if (in.attention) {
      attention_ = in.attention->row_vec(static_cast<std::uint64_t>(r.question_id));
    }
  }

  Vec input(std::size_t candidate) const {
    std::optional<std::span<const double>> att;
    if (in_.attention) att = std::span<const double>(attention_);
    return assemble_vqa_input(image_, question_, in_.answer((*record_.candidates)[candidate]),
                              att, in_.dims);
  }

 private:
  const VqaInputs& in_;
  const VqsRecord& record_;
  Vec image_;
  Vec question_;
  Vec attention_;
};

StageResult run_train_vqa(const StageOptions& o) {
  const Dataset ds = usable_dataset(o);
  const Records train = part_records(ds, o, SplitPart::kTrain);
  const QuestionEncoder enc = QuestionEncoder::for_training(o, train, "w");
  const VqaInputs in = load_vqa_inputs(o, enc);

  std::vector<int> labels;
  labels.reserve(train.size() * kNumCandidates);
  for (const auto* r : train) {
    const std::size_t answer = answer_index(*r);
    for (std::size_t c = 0; c < kNumCandidates; ++c) labels.push_back(c == answer);
  }
  // Consecutive items share a question, so keep the last one assembled.
  std::optional<std::pair<std::size_t, QuestionInputs>> last;
  auto input = [&](std::size_t item) {
    const std::size_t q = item / kNumCandidates;
    if (!last || last->first != q) last.emplace(q, QuestionInputs(in, enc, *train[q]));
    return last->second.input(item % kNumCandidates);
  };
  MlpConfig model;
  model.input_dim = in.dims.total();
  model.hidden = o.size_or("hidden", model.hidden);
  model.seed = o.u64_or("seed", 0);
  const auto result = train_mlp(input, labels, model, train_config(o));

  Json meta = enc.meta();
  meta["attention"] = in.attention.has_value();
  write_model(o.str("out"), result.params, meta);
  Json j{{"questions", train.size()},
         {"input_dim", in.dims.total()},
         {"report", dump_report(result.report)}};
  return {0, j.dump(2) + "\n"};
}

StageResult run_eval_vqa(const StageOptions& o) {
  const Dataset ds = usable_dataset(o);
  const Records records = part_records(ds, o, parse_part(o.str_or("part", "test")));
  const std::string model_path = o.str("model");
  const Checkpoint model = load_checkpoint(model_path);
  const Json meta = read_meta(model_path);
  if (meta.value("attention", false) && !o.has("attention-features")) {
    fail(ErrorCode::kMissingFeatures, "model was trained with --attention-features");
  }
  const QuestionEncoder enc = QuestionEncoder::from_meta(o, meta);
  const VqaInputs in = load_vqa_inputs(o, enc);

  std::map<Id, std::size_t> predicted, truth;
  std::map<AnswerType, std::pair<std::map<Id, std::size_t>, std::map<Id, std::size_t>>>
      by_type;
  Json scores_out{{"question_ids", Json::array()},
                  {"labels", Json::array()},
                  {"scores", Json::array()}};
  for (const auto* r : records) {
    const std::size_t label = answer_index(*r);
    const QuestionInputs inputs(in, enc, *r);
    Vec scores(kNumCandidates);
    for (std::size_t c = 0; c < kNumCandidates; ++c) {
      scores[c] = mlp_forward(inputs.input(c), model.params);
    }
    const std::size_t choice = predict_choice(scores);
    predicted[r->question_id] = choice;
    truth[r->question_id] = label;
    auto& bucket = by_type[answer_type(r->answer)];
    bucket.first[r->question_id] = choice;
    bucket.second[r->question_id] = label;
    scores_out["question_ids"].push_back(r->question_id);
    scores_out["labels"].push_back(label);
    scores_out["scores"].push_back(scores);
  }
  Json per_type = Json::object();
  for (AnswerType t : {AnswerType::kYesNo, AnswerType::kNumber, AnswerType::kOther}) {
    const auto& [p, g] = by_type[t];
    per_type[std::string(answer_type_name(t))] = {{"count", g.size()},
                                                  {"accuracy", accuracy(p, g)}};
  }
  if (o.has("scores-out")) write_json_file(o.str("scores-out"), scores_out);
  Json j{{"questions", records.size()},
         {"accuracy", accuracy(predicted, truth)},
         {"per_answer_type", per_type}};
  return {0, j.dump(2) + "\n"};
}

struct ScoreFile {
  std::vector<Id> question_ids;
  std::vector<std::size_t> labels;
  ModelScores scores;
};

ScoreFile read_scores(const std::string& path) {
  const Json j = read_json_file(path);
  try {
    ScoreFile f{j.at("question_ids").get<std::vector<Id>>(),
                j.at("labels").get<std::vector<std::size_t>>(),
                j.at("scores").get<ModelScores>()};
    if (f.labels.size() != f.question_ids.size() ||
        f.scores.size() != f.question_ids.size()) {
      fail(ErrorCode::kParseError, path + ": question_ids, labels and scores differ in length");
    }
    return f;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kParseError, path + ": " + e.what());
  }
}

// Loads score files for the same questions in the same order.
std::pair<std::vector<ModelScores>, std::vector<std::size_t>> read_score_set(
    const std::vector<std::string>& paths) {
  std::vector<ModelScores> models;
  std::vector<std::size_t> labels;
  std::vector<Id> ids;
  for (const auto& path : paths) {
    ScoreFile f = read_scores(path);
    if (models.empty()) {
      ids = f.question_ids;
      labels = f.labels;
    } else if (f.question_ids != ids || f.labels != labels) {
      fail(ErrorCode::kIdMismatch, path + " covers different questions or labels");
    }
    models.push_back(std::move(f.scores));
  }
  return {std::move(models), std::move(labels)};
}

StageResult run_ensemble(const StageOptions& o) {
  const auto& val_paths = o.list("val-scores");
  if (val_paths.empty()) fail(ErrorCode::kInvalidArgument, "missing required option --val-scores");
  const auto [val, val_labels] = read_score_set(val_paths);
  const Vec weights = tune_ensemble(val, val_labels, o.double_or("step", 0.05));
  Json singles = Json::array();
  for (std::size_t m = 0; m < val.size(); ++m) {
    Vec corner(val.size(), 0.0);
    corner[m] = 1.0;
    singles.push_back(choice_accuracy(apply_ensemble(val, corner), val_labels));
  }
  Json j{{"weights", weights},
         {"val_accuracy", choice_accuracy(apply_ensemble(val, weights), val_labels)},
         {"single_val_accuracy", singles}};
  const auto& test_paths = o.list("test-scores");
  if (!test_paths.empty()) {
    if (test_paths.size() != val_paths.size()) {
      fail(ErrorCode::kInvalidArgument, "--test-scores must list one file per model");
    }
    const auto [test, test_labels] = read_score_set(test_paths);
    j["test_accuracy"] = choice_accuracy(apply_ensemble(test, weights), test_labels);
  }
  return {0, j.dump(2) + "\n"};
}

// ---- question-focused segmentation ----

class ProposalSource {
 public:
  ProposalSource(const Dataset& ds, const StageOptions& o)
      : ds_(ds),
        features_(load_feature_store(o.str("proposal-features"))),
        limit_(o.size_or("proposals-per-image", kDefaultProposals)) {
    const Json j = read_json_file(o.str("proposals"));
    for (const auto& item : j) {
      SegmentRecord s = item.get<SegmentRecord>();
      auto& list = by_image_[s.image_id];
      if (list.size() < limit_) list.push_back(std::move(s));
    }
  }

  // Decoded proposals of an image; the last image is kept.
  const ProposalSet& of(Id image_id) {
    if (cached_ && cached_->image_id == image_id) return *cached_;
    const ImageMeta* image = ds_.find_image(image_id);
    if (!image) fail(ErrorCode::kNotFound, "unknown image " + std::to_string(image_id));
    ProposalSet set;
    set.image_id = image_id;
    auto it = by_image_.find(image_id);
    if (it == by_image_.end()) {
      fail(ErrorCode::kMissingProposals, "no proposals for image " + std::to_string(image_id));
    }
    for (const auto& s : it->second) {
      set.masks.push_back(decode_segment(s, image->height, image->width));
      set.features.push_back(features_.row_vec(static_cast<std::uint64_t>(s.segment_id)));
    }
    cached_ = std::move(set);
    return *cached_;
  }

 private:
  const Dataset& ds_;
  FeatureStore features_;
  std::size_t limit_;
  std::unordered_map<Id, std::vector<SegmentRecord>> by_image_;
  std::optional<ProposalSet> cached_;
};

// Visits records grouped by image so decoded proposals are reused.
Records by_image(Records records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const VqsRecord* a, const VqsRecord* b) { return a->image_id < b->image_id; });
  return records;
}

IouSample iou_sample(const Dataset& ds, const VqsRecord& r, const BinaryMask& predicted,
                     const BinaryMask& truth) {
  return {classify_question(r.question), r.selected_segment_ids.size(),
          ds.segment_count(r.image_id), iou(predicted, truth)};
}

Json prediction_json(const std::map<Id, BinaryMask>& predictions) {
  Json j = Json::object();
  for (const auto& [qid, mask] : predictions) j[std::to_string(qid)] = rle_encode(mask);
  return j;
}

StageResult run_train_qfss(const StageOptions& o) {
  const Dataset ds = usable_dataset(o);
  const Records train = by_image(part_records(ds, o, SplitPart::kTrain));
  const QuestionEncoder enc = QuestionEncoder::for_training(o, train, "b");
  ProposalSource proposals(ds, o);

  std::vector<AggregatorSample> samples;
  samples.reserve(train.size());
  for (const auto* r : train) {
    const ProposalSet& set = proposals.of(r->image_id);
    samples.push_back({r->question_id, enc.encode(*r), set.features,
                       proposal_overlap(set, ground_truth_mask(*r, ds))});
  }
  const auto result = train_aggregator(std::span<const AggregatorSample>(samples),
                                       train_config(o));

  double tau = kDefaultTau;
  std::size_t tuned_on = 0;
  if (o.has("tau")) {
    tau = o.double_or("tau", kDefaultTau);
  } else if (o.has("split")) {
    const Records val = by_image(part_records(ds, o, SplitPart::kVal));
    std::array<double, kTauGrid.size()> scores{};
    for (const auto* r : val) {
      const auto pred = predict_mask(enc.encode(*r), proposals.of(r->image_id), result.params);
      const BinaryMask truth = ground_truth_mask(*r, ds);
      for (std::size_t k = 0; k < kTauGrid.size(); ++k) {
        scores[k] += iou(threshold(pred.soft, kTauGrid[k]), truth);
      }
    }
    tuned_on = val.size();
    if (tuned_on > 0) tau = pick_tau(scores);
  }
  Json meta = enc.meta();
  meta["tau"] = tau;
  write_model(o.str("out"), result.params, meta);
  Json j{{"questions", samples.size()},
         {"tau", tau},
         {"tau_questions", tuned_on},
         {"report", dump_report(result.report)}};
  return {0, j.dump(2) + "\n"};
}

StageResult finish_iou(const StageOptions& o, const std::vector<IouSample>& samples,
                       const std::map<Id, BinaryMask>& predictions) {
  if (o.has("out")) write_json_file(o.str("out"), prediction_json(predictions));
  return {0, format_iou_table(summarize_iou(samples))};
}

StageResult run_eval_qfss(const StageOptions& o) {
  const Dataset ds = usable_dataset(o);
  const Records records = by_image(part_records(ds, o, parse_part(o.str_or("part", "test"))));
  const std::string model_path = o.str("model");
  const Checkpoint model = load_checkpoint(model_path);
  const Json meta = read_meta(model_path);
  const QuestionEncoder enc = QuestionEncoder::from_meta(o, meta);
  const double tau = o.double_or("tau", meta.value("tau", kDefaultTau));
  ProposalSource proposals(ds, o);

  std::vector<IouSample> samples;
  std::map<Id, BinaryMask> predictions;
  for (const auto* r : records) {
    auto pred = predict_mask(enc.encode(*r), proposals.of(r->image_id), model.params, tau);
    samples.push_back(iou_sample(ds, *r, pred.binary, ground_truth_mask(*r, ds)));
    if (o.has("out")) predictions.emplace(r->question_id, std::move(pred.binary));
  }
  return finish_iou(o, samples, predictions);
}

StageResult run_oracle_qfss(const StageOptions& o) {
  const Dataset ds = usable_dataset(o);
  const Records train = part_records(ds, o, SplitPart::kTrain);
  const Records test = part_records(ds, o, parse_part(o.str_or("part", "test")));
  const FeatureStore segment_features = load_feature_store(o.str("segment-features"));
  const QuestionEncoder enc = QuestionEncoder::for_training(o, train, "b");

  struct Item {
    std::size_t record;
    const SegmentRecord* segment;
  };
  std::vector<Item> items;
  std::vector<int> labels;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& selected = train[i]->selected_segment_ids;
    for (const auto* s : ds.segments_of(train[i]->image_id)) {
      items.push_back({i, s});
      labels.push_back(std::find(selected.begin(), selected.end(), s->segment_id) !=
                       selected.end());
    }
  }
  std::optional<std::pair<std::size_t, Vec>> last_question;
  auto input = [&](std::size_t k) {
    const Item& item = items[k];
    if (!last_question || last_question->first != item.record) {
      last_question.emplace(item.record, enc.encode(*train[item.record]));
    }
    OracleCandidate c{item.segment->segment_id, {},
                      segment_features.row_vec(static_cast<std::uint64_t>(item.segment->segment_id))};
    return oracle_input(c, last_question->second);
  };
  MlpConfig model;
  model.input_dim = segment_features.dim() + enc.dim();
  model.hidden = o.size_or("hidden", model.hidden);
  model.seed = o.u64_or("seed", 0);
  const auto result = train_mlp(input, labels, model, train_config(o));
  if (o.has("model-out")) write_model(o.str("model-out"), result.params, enc.meta());

  std::vector<IouSample> samples;
  std::map<Id, BinaryMask> predictions;
  for (const auto* r : test) {
    const ImageMeta* image = ds.find_image(r->image_id);
    OracleQuestion q{r->question_id, enc.encode(*r), {}, {}};
    for (const auto* s : ds.segments_of(r->image_id)) {
      q.candidates.push_back(
          {s->segment_id, decode_segment(*s, image->height, image->width),
           segment_features.row_vec(static_cast<std::uint64_t>(s->segment_id))});
    }
    BinaryMask pred = oracle_predict(q, result.params);
    samples.push_back(iou_sample(ds, *r, pred, ground_truth_mask(*r, ds)));
    if (o.has("out")) predictions.emplace(r->question_id, std::move(pred));
  }
  return finish_iou(o, samples, predictions);
}

}  // namespace

StageResult run_stage(std::string_view stage, const StageOptions& options) {
  if (stage == "validate") return run_validate(options);
  if (stage == "stats") return run_stats(options);
  if (stage == "split") return run_split(options);
  if (stage == "targets") return run_targets(options);
  if (stage == "train-attn") return run_train_attn(options);
  if (stage == "train-vqa") return run_train_vqa(options);
  if (stage == "eval-vqa") return run_eval_vqa(options);
  if (stage == "ensemble") return run_ensemble(options);
  if (stage == "train-qfss") return run_train_qfss(options);
  if (stage == "eval-qfss") return run_eval_qfss(options);
  if (stage == "oracle-qfss") return run_oracle_qfss(options);
  fail(ErrorCode::kInvalidArgument, "unknown stage '" + std::string(stage) + "'");
}

}  // namespace vqs
