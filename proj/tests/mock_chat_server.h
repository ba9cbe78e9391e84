// Copyright 2026 The normsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NORMSIM_TESTS_MOCK_CHAT_SERVER_H_
#define NORMSIM_TESTS_MOCK_CHAT_SERVER_H_

#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

namespace normsim::testing {

// A local chat-completions endpoint. The handler maps the request body to a
// (status, content) pair; status 200 wraps the content in a completions reply.
class MockChatServer {
 public:
  struct Reply {
    int status = 200;
    std::string content;
  };
  using Handler = std::function<Reply(const nlohmann::json& request)>;

  explicit MockChatServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post(R"(/v1/chat/completions)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   Reply reply;
                   {
                     std::lock_guard<std::mutex> lock(mu_);
                     authorization_.push_back(req.get_header_value("Authorization"));
                     ++calls_;
                     reply = handler_(nlohmann::json::parse(req.body));
                   }
                   res.status = reply.status;
                   if (reply.status == 200) {
                     const nlohmann::json body{
                         {"choices",
                          {{{"message", {{"role", "assistant"}, {"content", reply.content}}}}}}};
                     res.set_content(body.dump(), "application/json");
                   } else {
                     res.set_content(reply.content, "text/plain");
                   }
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockChatServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1";
  }
  int calls() {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
  }
  std::vector<std::string> authorization() {
    std::lock_guard<std::mutex> lock(mu_);
    return authorization_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  int calls_ = 0;
  std::vector<std::string> authorization_;
};

inline std::string Fenced(const std::string& json) {
  return "```json\n" + json + "\n```";
}

}  // namespace normsim::testing

#endif  // NORMSIM_TESTS_MOCK_CHAT_SERVER_H_
