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

// HTTP annotation service. Dataset files are read once and never written;
// assignments and submissions go to an append-only JSON-lines log that is
// replayed on start and compacted into links.json form on export.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "vqs/dataset.hpp"
#include "vqs/json_io.hpp"

namespace httplib {
class Server;
}

namespace vqs {

inline constexpr std::size_t kAssignmentImages = 100;

struct ServiceConfig {
  std::string data_dir;
  std::string log_path;   // empty: <data_dir>/submissions.jsonl
  std::string image_dir;  // served under /static/images; empty: <data_dir>/images
  std::string ui_dir;     // served under /static when set
  std::string host = "127.0.0.1";
  int port = 0;           // 0 picks a free port
};

struct Reply {
  int status = 200;
  Json body;
};

class AnnotationService {
 public:
  explicit AnnotationService(ServiceConfig config);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  // Binds and serves on a background thread; returns the bound port.
  int start();
  void stop();
  int port() const { return port_; }

  // Endpoint bodies, callable without a socket.
  Reply assignment(const std::string& annotator);
  Reply task(Id question_id) const;
  Reply submit(const std::string& body);
  Reply export_links() const;

 private:
  struct Assignment {
    std::string annotator;
    std::vector<Id> image_ids;
  };

  void replay_log();
  void append_log(const Json& event);
  void apply_assignment(const std::string& annotator, std::vector<Id> image_ids);
  void apply_submission(const Link& link);
  Json describe(const Assignment& a) const;
  bool finished(const Assignment& a) const;

  ServiceConfig config_;
  Dataset dataset_;
  std::unordered_map<Id, Question> questions_;
  std::map<Id, std::vector<Id>> questions_by_image_;
  std::vector<Id> image_order_;

  mutable std::mutex mutex_;
  std::vector<Assignment> assignments_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_annotator_;
  std::size_t next_image_ = 0;
  std::map<std::pair<Id, std::string>, Link> latest_;
  std::size_t skipped_log_lines_ = 0;

  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace vqs
