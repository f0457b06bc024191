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

#include "vqs/vqs.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "pipeline.hpp"
#include "service.hpp"
#include "vqs/dataset.hpp"
#include "vqs/error.hpp"
#include "vqs/json_io.hpp"
#include "vqs/mask.hpp"

struct vqs_mask {
  vqs::BinaryMask mask;
};

struct vqs_dataset {
  vqs::Dataset dataset;
};

struct vqs_options {
  vqs::StageOptions options;
};

struct vqs_server {
  std::unique_ptr<vqs::AnnotationService> service;
};

namespace {

thread_local std::string last_error;

vqs_status record(vqs_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs body, translating exceptions into status codes.
template <typename F>
vqs_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return VQS_OK;
  } catch (const vqs::Error& e) {
    return record(static_cast<vqs_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return record(VQS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return record(VQS_ERR_INTERNAL, e.what());
  } catch (...) {
    return record(VQS_ERR_INTERNAL, "unknown failure");
  }
}

void require(const void* p, const char* what) {
  if (!p) vqs::fail(vqs::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* vqs_version(void) { return "1.0.0"; }

const char* vqs_last_error(void) { return last_error.c_str(); }

const char* vqs_status_name(vqs_status status) {
  if (status == VQS_OK) return "Ok";
  if (status == VQS_ERR_INTERNAL) return "Internal";
  if (status < VQS_ERR_COUNT_MISMATCH || status > VQS_ERR_NOT_FOUND) return "Unknown";
  // error_code_name returns views of string literals.
  return vqs::error_code_name(static_cast<vqs::ErrorCode>(status)).data();
}

void vqs_string_free(char* text) { std::free(text); }

void vqs_counts_free(uint32_t* counts) { std::free(counts); }

vqs_status vqs_mask_create(int height, int width, const uint8_t* bits, vqs_mask** out) {
  return guarded([&] {
    require(out, "out");
    vqs::BinaryMask mask(height, width);
    if (bits) {
      std::vector<std::uint8_t> copy(bits, bits + mask.size());
      for (auto& b : copy) b = b ? 1 : 0;
      mask = vqs::BinaryMask(height, width, std::move(copy));
    }
    *out = new vqs_mask{std::move(mask)};
  });
}

vqs_status vqs_mask_from_rle(int height, int width, const uint32_t* counts,
                             size_t n_counts, vqs_mask** out) {
  return guarded([&] {
    require(out, "out");
    if (n_counts) require(counts, "counts");
    vqs::RleMask rle{height, width, std::vector<std::uint32_t>(counts, counts + n_counts)};
    *out = new vqs_mask{vqs::rle_decode(rle)};
  });
}

vqs_status vqs_mask_to_rle(const vqs_mask* mask, uint32_t** counts, size_t* n_counts) {
  return guarded([&] {
    require(mask, "mask");
    require(counts, "counts");
    require(n_counts, "n_counts");
    const auto rle = vqs::rle_encode(mask->mask);
    auto* data = static_cast<uint32_t*>(std::malloc(std::max<size_t>(1, rle.counts.size()) *
                                                    sizeof(uint32_t)));
    if (!data) throw std::bad_alloc();
    std::copy(rle.counts.begin(), rle.counts.end(), data);
    *counts = data;
    *n_counts = rle.counts.size();
  });
}

vqs_status vqs_mask_shape(const vqs_mask* mask, int* height, int* width) {
  return guarded([&] {
    require(mask, "mask");
    if (height) *height = mask->mask.height();
    if (width) *width = mask->mask.width();
  });
}

vqs_status vqs_mask_get(const vqs_mask* mask, int row, int col, int* value) {
  return guarded([&] {
    require(mask, "mask");
    require(value, "value");
    if (row < 0 || col < 0 || row >= mask->mask.height() || col >= mask->mask.width()) {
      vqs::fail(vqs::ErrorCode::kInvalidArgument, "pixel outside the mask");
    }
    *value = mask->mask.at(row, col) ? 1 : 0;
  });
}

vqs_status vqs_mask_area(const vqs_mask* mask, size_t* area) {
  return guarded([&] {
    require(mask, "mask");
    require(area, "area");
    *area = mask->mask.count();
  });
}

vqs_status vqs_mask_iou(const vqs_mask* a, const vqs_mask* b, double* out) {
  return guarded([&] {
    require(a, "a");
    require(b, "b");
    require(out, "out");
    *out = vqs::iou(a->mask, b->mask);
  });
}

void vqs_mask_free(vqs_mask* mask) { delete mask; }

vqs_status vqs_dataset_load(const char* dir, vqs_dataset** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new vqs_dataset{vqs::load_dataset(dir)};
  });
}

vqs_status vqs_dataset_counts(const vqs_dataset* dataset, size_t* images,
                              size_t* segments, size_t* records) {
  return guarded([&] {
    require(dataset, "dataset");
    if (images) *images = dataset->dataset.images().size();
    if (segments) *segments = dataset->dataset.segments().size();
    if (records) *records = dataset->dataset.records().size();
  });
}

vqs_status vqs_dataset_validate(const vqs_dataset* dataset, size_t* n_violations,
                                char** json) {
  return guarded([&] {
    require(dataset, "dataset");
    const auto violations = vqs::validate(dataset->dataset);
    if (n_violations) *n_violations = violations.size();
    if (json) *json = copy_string(vqs::Json(violations).dump());
  });
}

vqs_status vqs_dataset_stats(const vqs_dataset* dataset, char** json) {
  return guarded([&] {
    require(dataset, "dataset");
    require(json, "json");
    *json = copy_string(
        vqs::Json(vqs::compute_stats(vqs::drop_flagged(dataset->dataset))).dump());
  });
}

vqs_status vqs_dataset_ground_truth(const vqs_dataset* dataset, int64_t question_id,
                                    vqs_mask** out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    const auto* r = dataset->dataset.find_record(question_id);
    if (!r) {
      vqs::fail(vqs::ErrorCode::kNotFound, "no record for question " + std::to_string(question_id));
    }
    *out = new vqs_mask{vqs::ground_truth_mask(*r, dataset->dataset)};
  });
}

void vqs_dataset_free(vqs_dataset* dataset) { delete dataset; }

vqs_status vqs_options_create(vqs_options** out) {
  return guarded([&] {
    require(out, "out");
    *out = new vqs_options{};
  });
}

vqs_status vqs_options_set(vqs_options* options, const char* key, const char* value) {
  return guarded([&] {
    require(options, "options");
    require(key, "key");
    require(value, "value");
    options->options.set(key, value);
  });
}

vqs_status vqs_options_append(vqs_options* options, const char* key, const char* value) {
  return guarded([&] {
    require(options, "options");
    require(key, "key");
    require(value, "value");
    options->options.append(key, value);
  });
}

void vqs_options_free(vqs_options* options) { delete options; }

int vqs_is_stage(const char* name) { return name && vqs::is_stage(name) ? 1 : 0; }

vqs_status vqs_stage_run(const char* stage, const vqs_options* options, int* exit_status,
                         char** output) {
  return guarded([&] {
    require(stage, "stage");
    require(options, "options");
    const auto result = vqs::run_stage(stage, options->options);
    if (exit_status) *exit_status = result.status;
    if (output) *output = copy_string(result.output);
  });
}

vqs_status vqs_server_create(const vqs_options* options, vqs_server** out) {
  return guarded([&] {
    require(options, "options");
    require(out, "out");
    const auto& o = options->options;
    vqs::ServiceConfig config;
    config.data_dir = o.str("data-dir");
    config.log_path = o.str_or("log", "");
    config.image_dir = o.str_or("image-dir", "");
    config.ui_dir = o.str_or("ui-dir", "");
    config.host = o.str_or("host", config.host);
    const auto port = o.u64_or("port", 0);
    if (port > 65535) vqs::fail(vqs::ErrorCode::kInvalidArgument, "--port must be below 65536");
    config.port = static_cast<int>(port);
    *out = new vqs_server{std::make_unique<vqs::AnnotationService>(std::move(config))};
  });
}

vqs_status vqs_server_start(vqs_server* server, int* port) {
  return guarded([&] {
    require(server, "server");
    const int bound = server->service->start();
    if (port) *port = bound;
  });
}

vqs_status vqs_server_port(const vqs_server* server, int* port) {
  return guarded([&] {
    require(server, "server");
    require(port, "port");
    *port = server->service->port();
  });
}

vqs_status vqs_server_stop(vqs_server* server) {
  return guarded([&] {
    require(server, "server");
    server->service->stop();
  });
}

void vqs_server_free(vqs_server* server) { delete server; }

}  // extern "C"
