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

#include <cstring>
#include <string>
#include <vector>

#include "vqs/vqs.h"

namespace {

const std::string kTiny = std::string(VQS_FIXTURE_DIR) + "/tiny";
const std::string kBroken = std::string(VQS_FIXTURE_DIR) + "/broken";

std::string take(char* text) {
  std::string out = text ? text : "";
  vqs_string_free(text);
  return out;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(vqs_version()) > 0);
  CHECK(std::string(vqs_status_name(VQS_OK)) == "Ok");
  CHECK(std::string(vqs_status_name(VQS_ERR_COUNT_MISMATCH)) == "CountMismatch");
  CHECK(std::string(vqs_status_name(VQS_ERR_INTERNAL)) == "Internal");
}

TEST_CASE("mask handles roundtrip through rle") {
  const uint8_t bits[4] = {1, 0, 0, 0};  // row-major, pixel (0,0)
  vqs_mask* m = nullptr;
  REQUIRE(vqs_mask_create(2, 2, bits, &m) == VQS_OK);
  uint32_t* counts = nullptr;
  size_t n = 0;
  REQUIRE(vqs_mask_to_rle(m, &counts, &n) == VQS_OK);
  REQUIRE(n == 3);
  CHECK(counts[0] == 0);
  CHECK(counts[1] == 1);
  CHECK(counts[2] == 3);

  vqs_mask* back = nullptr;
  REQUIRE(vqs_mask_from_rle(2, 2, counts, n, &back) == VQS_OK);
  vqs_counts_free(counts);
  double v = 0.0;
  REQUIRE(vqs_mask_iou(m, back, &v) == VQS_OK);
  CHECK(v == 1.0);
  size_t area = 0;
  CHECK(vqs_mask_area(back, &area) == VQS_OK);
  CHECK(area == 1);
  int h = 0, w = 0, px = -1;
  CHECK(vqs_mask_shape(back, &h, &w) == VQS_OK);
  CHECK(h == 2);
  CHECK(vqs_mask_get(back, 0, 0, &px) == VQS_OK);
  CHECK(px == 1);
  CHECK(vqs_mask_get(back, 2, 0, &px) == VQS_ERR_INVALID_ARGUMENT);
  vqs_mask_free(back);
  vqs_mask_free(m);
}

TEST_CASE("errors come back as codes with a message") {
  const uint32_t bad[1] = {3};
  vqs_mask* m = nullptr;
  CHECK(vqs_mask_from_rle(2, 2, bad, 1, &m) == VQS_ERR_COUNT_MISMATCH);
  CHECK(m == nullptr);
  CHECK(std::strlen(vqs_last_error()) > 0);
  CHECK(vqs_mask_create(0, 2, nullptr, &m) != VQS_OK);
  CHECK(vqs_mask_area(nullptr, nullptr) == VQS_ERR_INVALID_ARGUMENT);
  vqs_dataset* ds = nullptr;
  CHECK(vqs_dataset_load("/nonexistent/dir", &ds) != VQS_OK);
  CHECK(ds == nullptr);
}

TEST_CASE("dataset handle") {
  vqs_dataset* ds = nullptr;
  REQUIRE(vqs_dataset_load(kTiny.c_str(), &ds) == VQS_OK);
  size_t images = 0, segments = 0, records = 0;
  CHECK(vqs_dataset_counts(ds, &images, &segments, &records) == VQS_OK);
  CHECK(images == 4);
  CHECK(segments == 14);
  CHECK(records == 10);
  size_t nv = 99;
  char* json = nullptr;
  CHECK(vqs_dataset_validate(ds, &nv, &json) == VQS_OK);
  CHECK(nv == 0);
  CHECK(take(json) == "[]");
  CHECK(vqs_dataset_stats(ds, &json) == VQS_OK);
  CHECK(take(json).find("\"n_questions\":8") != std::string::npos);
  vqs_mask* gt = nullptr;
  REQUIRE(vqs_dataset_ground_truth(ds, 1009, &gt) == VQS_OK);
  size_t area = 0;
  vqs_mask_area(gt, &area);
  CHECK(area == 16);
  vqs_mask_free(gt);
  CHECK(vqs_dataset_ground_truth(ds, 1003, &gt) == VQS_ERR_FLAGGED_RECORD);
  CHECK(vqs_dataset_ground_truth(ds, 5, &gt) == VQS_ERR_NOT_FOUND);
  vqs_dataset_free(ds);

  REQUIRE(vqs_dataset_load(kBroken.c_str(), &ds) == VQS_OK);
  CHECK(vqs_dataset_validate(ds, &nv, &json) == VQS_OK);
  CHECK(nv == 4);
  CHECK(take(json).find("rle_count_mismatch") != std::string::npos);
  vqs_dataset_free(ds);
}

TEST_CASE("stages run through an options bag") {
  CHECK(vqs_is_stage("stats"));
  CHECK_FALSE(vqs_is_stage("bogus"));
  vqs_options* o = nullptr;
  REQUIRE(vqs_options_create(&o) == VQS_OK);
  int status = -1;
  char* out = nullptr;
  // data-dir missing
  CHECK(vqs_stage_run("stats", o, &status, &out) == VQS_ERR_INVALID_ARGUMENT);
  CHECK(std::string(vqs_last_error()).find("--data-dir") != std::string::npos);
  REQUIRE(vqs_options_set(o, "data-dir", kBroken.c_str()) == VQS_OK);
  REQUIRE(vqs_stage_run("validate", o, &status, &out) == VQS_OK);
  CHECK(status == 1);
  CHECK(take(out).find("\"count\": 4") != std::string::npos);
  vqs_options_set(o, "data-dir", kTiny.c_str());
  REQUIRE(vqs_stage_run("stats", o, &status, &out) == VQS_OK);
  CHECK(status == 0);
  CHECK(take(out).find("\"n_images\": 4") != std::string::npos);
  CHECK(vqs_stage_run("bogus", o, &status, &out) == VQS_ERR_INVALID_ARGUMENT);
  vqs_options_free(o);
}

TEST_CASE("server lifecycle") {
  vqs_options* o = nullptr;
  vqs_options_create(&o);
  vqs_options_set(o, "data-dir", kTiny.c_str());
  vqs_options_set(o, "log", "/dev/null");
  vqs_server* s = nullptr;
  REQUIRE(vqs_server_create(o, &s) == VQS_OK);
  int port = 0;
  REQUIRE(vqs_server_start(s, &port) == VQS_OK);
  CHECK(port > 0);
  int again = 0;
  CHECK(vqs_server_port(s, &again) == VQS_OK);
  CHECK(again == port);
  CHECK(vqs_server_stop(s) == VQS_OK);
  vqs_server_free(s);
  vqs_options_free(o);
}
