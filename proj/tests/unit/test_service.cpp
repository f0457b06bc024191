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

#include <doctest.h>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "service.hpp"
#include "support.hpp"

using namespace vqs;
namespace fs = std::filesystem;

namespace {

// tiny fixture without its links: every question still needs annotating
void copy_tiny(const fs::path& dst) {
  const fs::path src = fs::path(VQS_FIXTURE_DIR) / "tiny";
  fs::copy(src, dst, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  fs::remove(dst / "links.json");
}

std::string submission(Id qid, std::vector<Id> segs, std::string flag = "none",
                       std::string annotator = "ann", Json boxes = Json::array()) {
  return Json{{"question_id", qid},
              {"annotator_id", annotator},
              {"selected_segment_ids", segs},
              {"boxes", boxes},
              {"flag", flag}}
      .dump();
}

ServiceConfig config_for(const test::TempDir& dir) {
  ServiceConfig c;
  c.data_dir = dir.path().string();
  return c;
}

}  // namespace

TEST_CASE("assignment hands out images and resumes until finished") {
  test::TempDir dir;
  copy_tiny(dir.path());
  AnnotationService svc(config_for(dir));
  CHECK(svc.assignment("").status == 400);
  auto a = svc.assignment("ann");
  REQUIRE(a.status == 200);
  CHECK(a.body["image_ids"].size() == 4);
  CHECK(a.body["tasks"].size() == 10);
  CHECK(a.body["pending"] == 10);
  // same block again while unfinished
  CHECK(svc.assignment("ann").body["image_ids"] == a.body["image_ids"]);
  // every image is taken, so another annotator gets nothing
  CHECK(svc.assignment("other").body["tasks"].empty());
  CHECK(svc.submit(submission(1001, {101, 103})).status == 200);
  auto again = svc.assignment("ann");
  CHECK(again.body["completed"] == 1);
  CHECK(again.body["pending"] == 9);
}

TEST_CASE("task describes the question and segments") {
  test::TempDir dir;
  copy_tiny(dir.path());
  AnnotationService svc(config_for(dir));
  auto t = svc.task(1004);
  REQUIRE(t.status == 200);
  CHECK(t.body["image_url"] == "/static/images/img_0002.png");
  CHECK(t.body["width"] == 16);
  CHECK(t.body["height"] == 12);
  CHECK(t.body["segments"].size() == 4);
  auto rle = t.body["segments"][0]["rle"].get<RleMask>();
  CHECK(rle.height == 12);
  CHECK(svc.task(424242).status == 404);
}

TEST_CASE("submissions are validated") {
  test::TempDir dir;
  copy_tiny(dir.path());
  AnnotationService svc(config_for(dir));
  auto err = [&](const std::string& body) {
    auto r = svc.submit(body);
    return std::make_pair(r.status, r.body.value("error", std::string()));
  };
  CHECK(err("{not json") == std::make_pair(400, std::string("parse_error")));
  CHECK(err(R"({"question_id": "x", "annotator_id": "a"})").second == "invalid_field");
  CHECK(err(submission(1001, {101}, "maybe")).second == "invalid_flag");
  CHECK(err(submission(1001, {101}, "none", "")).second == "missing_annotator");
  CHECK(err(submission(9999, {101})) == std::make_pair(404, std::string("unknown_question")));
  CHECK(err(submission(1002, {})).second == "empty_selection");
  CHECK(err(submission(1002, {104})).second == "segment_image_mismatch");
  CHECK(err(submission(1002, {555})).second == "unknown_segment");
  CHECK(err(submission(1002, {}, "none", "ann", Json::array({{{"x", 0}, {"y", 0}, {"w", 0}, {"h", 1}}})))
            .second == "invalid_box");
  CHECK(svc.export_links().body.empty());
}

TEST_CASE("count mismatch is a warning and flagged empty selections are accepted") {
  test::TempDir dir;
  copy_tiny(dir.path());
  AnnotationService svc(config_for(dir));
  auto r = svc.submit(submission(1001, {101}));
  CHECK(r.status == 200);
  CHECK(r.body["warning"] == "count_mismatch");
  auto ok = svc.submit(submission(1001, {101, 103}));
  CHECK(ok.body["warning"].is_null());
  auto flagged = svc.submit(submission(1003, {}, "full_image"));
  CHECK(flagged.status == 200);
  CHECK(flagged.body["accepted"] == true);
}

TEST_CASE("export keeps the last submission per question and annotator; log replays") {
  test::TempDir dir;
  copy_tiny(dir.path());
  {
    AnnotationService svc(config_for(dir));
    svc.submit(submission(1002, {101}));
    svc.submit(submission(1002, {102}));
    svc.submit(submission(1002, {103}, "none", "second"));
    auto links = svc.export_links().body;
    REQUIRE(links.size() == 2);
    for (const auto& l : links) {
      if (l["annotator_id"] == "ann") CHECK(l["selected_segment_ids"] == Json::array({102}));
    }
  }
  // a torn final line is ignored on replay
  {
    std::ofstream out(dir.file("submissions.jsonl"), std::ios::app);
    out << "{\"event\": \"submis";
  }
  AnnotationService again(config_for(dir));
  auto links = again.export_links().body;
  CHECK(links.size() == 2);
}

TEST_CASE("routes over http") {
  test::TempDir dir;
  copy_tiny(dir.path());
  AnnotationService svc(config_for(dir));
  const int port = svc.start();
  REQUIRE(port > 0);
  httplib::Client cli("127.0.0.1", port);
  auto a = cli.Get("/api/assignment?annotator=web");
  REQUIRE(a);
  CHECK(a->status == 200);
  auto t = cli.Get("/api/task/1001");
  REQUIRE(t);
  CHECK(Json::parse(t->body)["question"] == "How many dogs are there?");
  auto missing = cli.Get("/api/task/-5");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto post = cli.Post("/api/annotation", submission(1001, {101, 103}, "none", "web"),
                       "application/json");
  REQUIRE(post);
  CHECK(post->status == 200);
  auto bad = cli.Post("/api/annotation", "[]", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  auto ex = cli.Get("/api/export");
  REQUIRE(ex);
  CHECK(Json::parse(ex->body).size() == 1);
  auto img = cli.Get("/static/images/img_0001.png");
  REQUIRE(img);
  CHECK(img->status == 200);
  svc.stop();
}
