#pragma once

// Local stand-in for an OpenAI-compatible images endpoint. Each base path
// selects one behaviour:
//   /ok        200, b64_json of the red 2x2 fixture
//   /url       200, url pointing at /files/red.png on this server
//   /limited   429 with Retry-After: 2
//   /denied    401
//   /broken    503
//   /malformed 200 with a non-JSON body

#include <atomic>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "stylebench/genclient.hpp"
#include "stylebench/image_io.hpp"
#include "test_support.hpp"

namespace stylebench::test {

class StubImagesServer {
 public:
  StubImagesServer() : png_(read_file_bytes(fixture("red_2x2.png"))) {
    const std::string b64 = base64_encode(png_);
    server_.Post("/ok/images/generations", [this, b64](const httplib::Request& req, httplib::Response& res) {
      record(req);
      res.set_content(nlohmann::json{{"created", 0}, {"data", {{{"b64_json", b64}}}}}.dump(), "application/json");
    });
    server_.Post("/url/images/generations", [this](const httplib::Request& req, httplib::Response& res) {
      record(req);
      res.set_content(nlohmann::json{{"data", {{{"url", url("/files/red.png")}}}}}.dump(), "application/json");
    });
    server_.Get("/files/red.png", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(std::string(png_.begin(), png_.end()), "image/png");
    });
    server_.Post("/limited/images/generations", [this](const httplib::Request& req, httplib::Response& res) {
      record(req);
      res.status = 429;
      res.set_header("Retry-After", "2");
      res.set_content(R"({"error":{"message":"slow down"}})", "application/json");
    });
    server_.Post("/denied/images/generations", [this](const httplib::Request& req, httplib::Response& res) {
      record(req);
      res.status = 401;
    });
    server_.Post("/broken/images/generations", [this](const httplib::Request& req, httplib::Response& res) {
      record(req);
      res.status = 503;
    });
    server_.Post("/malformed/images/generations", [this](const httplib::Request& req, httplib::Response& res) {
      record(req);
      res.set_content("<html>not json</html>", "text/html");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubImagesServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  int requests() const { return requests_.load(); }
  std::string last_body() const {
    std::lock_guard<std::mutex> lock(mu_);
    return last_body_;
  }
  std::string last_authorization() const {
    std::lock_guard<std::mutex> lock(mu_);
    return last_auth_;
  }

 private:
  void record(const httplib::Request& req) {
    ++requests_;
    std::lock_guard<std::mutex> lock(mu_);
    last_body_ = req.body;
    last_auth_ = req.get_header_value("Authorization");
  }

  std::vector<std::uint8_t> png_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
  mutable std::mutex mu_;
  std::string last_body_;
  std::string last_auth_;
};

}  // namespace stylebench::test
