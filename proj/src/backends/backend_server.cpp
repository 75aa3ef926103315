#include "codevqa/backends/backend_server.hpp"

#include "codevqa/backends/protocol.hpp"
#include "httplib.h"

namespace codevqa::backends {

namespace {

int status_for(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::kRemote: return 422;
    case BackendErrorKind::kTimeout: return 504;
    case BackendErrorKind::kTransport:
    case BackendErrorKind::kProtocol: return 502;
  }
  return 500;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Request, typename Handler>
httplib::Server::Handler route(std::string capability, Handler handler) {
  return [capability = std::move(capability), handler](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      reply(res, 400, error_body(capability, std::string("request is not JSON: ") + e.what()));
      return;
    }
    Request request;
    try {
      request = decode<Request>(body);
    } catch (const BackendError& e) {
      reply(res, 400, error_body(capability, e.what()));
      return;
    }
    try {
      reply(res, 200, json(handler(request)));
    } catch (const BackendError& e) {
      reply(res, status_for(e.kind()), error_body(capability, e.what()));
    } catch (const std::exception& e) {
      reply(res, 500, error_body(capability, e.what()));
    }
  };
}

}  // namespace

BackendServer::BackendServer(std::shared_ptr<Backend> backend)
    : backend_(std::move(backend)), server_(std::make_unique<httplib::Server>()) {
  if (!backend_) throw Error("backend server needs a backend");
  install_routes();
}

BackendServer::~BackendServer() { stop(); }

void BackendServer::install_routes() {
  Backend& b = *backend_;
  server_->Post(std::string(routes::kComplete),
                route<CompleteRequest>("complete", [&b](const CompleteRequest& r) { return b.complete(r); }));
  server_->Post(std::string(routes::kAttention),
                route<AttentionRequest>("attention", [&b](const AttentionRequest& r) { return b.attention(r); }));
  server_->Post(std::string(routes::kCaption),
                route<CaptionRequest>("caption", [&b](const CaptionRequest& r) { return b.caption(r); }));
  server_->Post(std::string(routes::kItc), route<ItcRequest>("itc", [&b](const ItcRequest& r) { return b.itc(r); }));
  server_->Post(std::string(routes::kDetect),
                route<DetectRequest>("detect", [&b](const DetectRequest& r) { return b.detect(r); }));
  server_->Post(std::string(routes::kEmbed),
                route<EmbedRequest>("embed", [&b](const EmbedRequest& r) { return b.embed(r); }));
  const auto describe = [&b](const httplib::Request&, httplib::Response& res) {
    try {
      reply(res, 200, json(b.describe()));
    } catch (const std::exception& e) {
      reply(res, 500, error_body("describe", e.what()));
    }
  };
  server_->Get(std::string(routes::kDescribe), describe);
  server_->Post(std::string(routes::kDescribe), describe);
}

int BackendServer::start(const std::string& host, int port) {
  if (thread_.joinable()) return port_;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void BackendServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void BackendServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace codevqa::backends
