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

#include "service.hpp"

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include "vqs/error.hpp"
#include "vqs/mask.hpp"

namespace vqs {

namespace {

Reply error_reply(int status, const std::string& rule, const std::string& detail) {
  return {status, Json{{"error", rule}, {"detail", detail}}};
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Question question_of(const VqsRecord& r) {
  return {r.question_id, r.image_id, r.question, r.answer, r.candidates};
}

}  // namespace

AnnotationService::AnnotationService(ServiceConfig config)
    : config_(std::move(config)), dataset_(load_dataset(config_.data_dir)) {
  namespace fs = std::filesystem;
  if (config_.log_path.empty()) {
    config_.log_path = (fs::path(config_.data_dir) / "submissions.jsonl").string();
  }
  if (config_.image_dir.empty()) {
    config_.image_dir = (fs::path(config_.data_dir) / "images").string();
  }
  for (const auto& r : dataset_.records()) questions_.emplace(r.question_id, question_of(r));
  for (const auto& q : dataset_.unlinked_questions()) questions_.emplace(q.question_id, q);
  for (const auto& [qid, q] : questions_) questions_by_image_[q.image_id].push_back(qid);
  for (auto& [image, qids] : questions_by_image_) {
    std::sort(qids.begin(), qids.end());
    image_order_.push_back(image);
  }
  replay_log();
}

AnnotationService::~AnnotationService() { stop(); }

void AnnotationService::replay_log() {
  std::ifstream in(config_.log_path);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A crash can leave a partial last line; such lines are skipped.
    const Json event = Json::parse(line, nullptr, false);
    if (event.is_discarded() || !event.is_object()) {
      ++skipped_log_lines_;
      continue;
    }
    try {
      const std::string kind = event.at("event").get<std::string>();
      if (kind == "assignment") {
        apply_assignment(event.at("annotator_id").get<std::string>(),
                         event.at("image_ids").get<std::vector<Id>>());
      } else if (kind == "submission") {
        apply_submission(event.at("link").get<Link>());
      } else {
        ++skipped_log_lines_;
      }
    } catch (const std::exception&) {
      ++skipped_log_lines_;
    }
  }
}

void AnnotationService::append_log(const Json& event) {
  std::ofstream out(config_.log_path, std::ios::app);
  out << event.dump() << '\n';
  out.flush();
  if (!out) fail(ErrorCode::kIo, "cannot append to " + config_.log_path);
}

void AnnotationService::apply_assignment(const std::string& annotator,
                                         std::vector<Id> image_ids) {
  next_image_ += image_ids.size();
  by_annotator_[annotator].push_back(assignments_.size());
  assignments_.push_back({annotator, std::move(image_ids)});
}

void AnnotationService::apply_submission(const Link& link) {
  latest_[{link.question_id, link.annotator_id}] = link;
}

bool AnnotationService::finished(const Assignment& a) const {
  for (Id image : a.image_ids) {
    auto it = questions_by_image_.find(image);
    if (it == questions_by_image_.end()) continue;
    for (Id qid : it->second) {
      if (!latest_.count({qid, a.annotator})) return false;
    }
  }
  return true;
}

Json AnnotationService::describe(const Assignment& a) const {
  Json tasks = Json::array();
  std::size_t done = 0;
  for (Id image : a.image_ids) {
    auto it = questions_by_image_.find(image);
    if (it == questions_by_image_.end()) continue;
    for (Id qid : it->second) {
      const bool completed = latest_.count({qid, a.annotator}) != 0;
      done += completed;
      tasks.push_back({{"question_id", qid}, {"image_id", image}, {"completed", completed}});
    }
  }
  return Json{{"annotator_id", a.annotator},
              {"image_ids", a.image_ids},
              {"tasks", tasks},
              {"completed", done},
              {"pending", tasks.size() - done}};
}

Reply AnnotationService::assignment(const std::string& annotator) {
  if (annotator.empty()) return error_reply(400, "missing_annotator", "annotator is required");
  std::lock_guard lock(mutex_);
  auto it = by_annotator_.find(annotator);
  if (it != by_annotator_.end()) {
    const Assignment& last = assignments_[it->second.back()];
    if (!finished(last)) return {200, describe(last)};
  }
  if (next_image_ >= image_order_.size()) {
    return {200, Json{{"annotator_id", annotator},
                      {"image_ids", Json::array()},
                      {"tasks", Json::array()},
                      {"completed", 0},
                      {"pending", 0}}};
  }
  const std::size_t end = std::min(image_order_.size(), next_image_ + kAssignmentImages);
  std::vector<Id> images(image_order_.begin() + static_cast<std::ptrdiff_t>(next_image_),
                         image_order_.begin() + static_cast<std::ptrdiff_t>(end));
  append_log({{"event", "assignment"}, {"annotator_id", annotator}, {"image_ids", images},
              {"timestamp", now_ms()}});
  apply_assignment(annotator, std::move(images));
  return {200, describe(assignments_.back())};
}

Reply AnnotationService::task(Id question_id) const {
  auto it = questions_.find(question_id);
  if (it == questions_.end()) {
    return error_reply(404, "unknown_question", "question " + std::to_string(question_id));
  }
  const Question& q = it->second;
  const ImageMeta* image = dataset_.find_image(q.image_id);
  if (!image) return error_reply(404, "unknown_image", "image " + std::to_string(q.image_id));
  Json segments = Json::array();
  for (const auto* s : dataset_.segments_of(q.image_id)) {
    segments.push_back({{"segment_id", s->segment_id},
                        {"category", s->category},
                        {"display_color", s->display_color},
                        {"rle", rle_encode(decode_segment(*s, image->height, image->width))}});
  }
  return {200, Json{{"question_id", q.question_id},
                    {"image_id", q.image_id},
                    {"image_url", "/static/images/" + image->file_name},
                    {"width", image->width},
                    {"height", image->height},
                    {"question", q.question},
                    {"answer", q.answer},
                    {"segments", segments}}};
}

Reply AnnotationService::submit(const std::string& body) {
  const Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    return error_reply(400, "parse_error", "body is not a JSON object");
  }
  Link link;
  try {
    link.question_id = j.at("question_id").get<Id>();
    link.annotator_id = j.at("annotator_id").get<std::string>();
    link.selected_segment_ids = j.value("selected_segment_ids", std::vector<Id>{});
    link.boxes = j.value("boxes", std::vector<Box>{});
    const std::string flag = j.value("flag", std::string("none"));
    const auto parsed = parse_flag(flag);
    if (!parsed) return error_reply(400, "invalid_flag", flag);
    link.flag = *parsed;
  } catch (const std::exception& e) {
    return error_reply(400, "invalid_field", e.what());
  }
  if (link.annotator_id.empty()) {
    return error_reply(400, "missing_annotator", "annotator_id is required");
  }
  auto it = questions_.find(link.question_id);
  if (it == questions_.end()) {
    return error_reply(404, "unknown_question", "question " + std::to_string(link.question_id));
  }
  const VqsRecord record = join(it->second, link);
  const auto violations = validate_selection(record, dataset_);
  if (!violations.empty()) {
    return {400, Json{{"error", violations.front().rule},
                      {"detail", violations.front().detail},
                      {"violations", violations}}};
  }
  Json warning = nullptr;
  if (check_count_answer(record) == CountCheck::kMismatch) warning = "count_mismatch";

  std::lock_guard lock(mutex_);
  append_log({{"event", "submission"},
              {"link", link},
              {"timestamp", j.contains("timestamp") ? j["timestamp"] : Json(now_ms())}});
  apply_submission(link);
  return {200, Json{{"accepted", true}, {"question_id", link.question_id}, {"warning", warning}}};
}

Reply AnnotationService::export_links() const {
  std::lock_guard lock(mutex_);
  Json links = Json::array();
  for (const auto& [key, link] : latest_) links.push_back(link);
  return {200, links};
}

int AnnotationService::start() {
  if (server_) return port_;
  server_ = std::make_unique<httplib::Server>();
  auto& svr = *server_;
  auto send = [](httplib::Response& res, const Reply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  svr.Get("/api/assignment", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, assignment(req.get_param_value("annotator")));
  });
  svr.Get(R"(/api/task/(-?\d+))", [this, send](const httplib::Request& req,
                                              httplib::Response& res) {
    try {
      send(res, task(std::stoll(req.matches[1].str())));
    } catch (const std::out_of_range&) {
      send(res, error_reply(404, "unknown_question", req.matches[1].str()));
    }
  });
  svr.Post("/api/annotation", [this, send](const httplib::Request& req, httplib::Response& res) {
    try {
      send(res, submit(req.body));
    } catch (const Error& e) {
      send(res, error_reply(500, std::string(error_code_name(e.code())), e.what()));
    }
  });
  svr.Get("/api/export", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, export_links());
  });
  svr.set_mount_point("/static/images", config_.image_dir);
  if (!config_.ui_dir.empty()) svr.set_mount_point("/static", config_.ui_dir);

  port_ = config_.port == 0 ? svr.bind_to_any_port(config_.host)
                            : (svr.bind_to_port(config_.host, config_.port) ? config_.port : -1);
  if (port_ <= 0) {
    server_.reset();
    port_ = 0;
    fail(ErrorCode::kIo, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  // stop() before the accept loop starts would otherwise be lost
  server_->wait_until_ready();
  return port_;
}

void AnnotationService::stop() {
  if (!server_) return;
  server_->stop();
  if (thread_.joinable()) thread_.join();
  server_.reset();
  port_ = 0;
}

}  // namespace vqs
