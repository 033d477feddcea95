#include "subplex/http_server.hpp"

#include <charconv>

#include "httplib.h"

namespace subplex {

namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json(nullptr);
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    throw ApiError(400, "bad_json", std::string("request body is not valid JSON: ") + e.what());
  }
}

int parse_int(const std::string& text, const char* what) {
  int value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ApiError(422, "validation_error", std::string(what) + " must be an integer");
  }
  return value;
}

IngestConfig ingest_from(const httplib::Request& req) {
  IngestConfig cfg;
  const auto type = req.get_header_value("Content-Type");
  if (type.find("json") != std::string::npos) {
    cfg.format = IngestConfig::Format::json;
  } else if (type.find("csv") != std::string::npos || type.find("tab-separated") != std::string::npos) {
    cfg.format = IngestConfig::Format::delimited;
  }
  if (req.has_param("id_column")) cfg.id_column = req.get_param_value("id_column");
  if (req.has_param("label_column")) cfg.label_column = req.get_param_value("label_column");
  if (req.has_param("delimiter")) {
    const auto d = req.get_param_value("delimiter");
    if (d == "tab" || d == "\t") {
      cfg.delimiter = '\t';
    } else if (d.size() == 1) {
      cfg.delimiter = d[0];
    } else {
      throw ApiError(422, "validation_error", "delimiter must be one character or 'tab'");
    }
  }
  return cfg;
}

}  // namespace

struct HttpServer::Impl {
  SessionService& service;
  httplib::Server server;

  explicit Impl(SessionService& s) : service(s) {}

  // Runs a handler and turns every failure into a JSON error response.
  template <typename F>
  httplib::Server::Handler wrap(F handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const ApiError& e) {
        reply(res, e.status(), e.body());
      } catch (const std::exception& e) {
        reply(res, 500, ApiError(500, "internal_error", e.what()).body());
      }
    };
  }

  void routes() {
    const std::string sid = R"(/sessions/([0-9a-f]+))";

    server.Post("/sessions", wrap([this](const httplib::Request&, httplib::Response& res) {
      reply(res, 201, {{"session_id", service.create_session()}});
    }));
    server.Post("/sessions/restore", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      if (!body.is_object() || !body.contains("snapshot") || !body.at("snapshot").is_string()) {
        throw ApiError(422, "validation_error", "body must be {\"snapshot\": name}");
      }
      reply(res, 201, {{"session_id", service.restore_snapshot(body.at("snapshot").get<std::string>())}});
    }));
    server.Delete(sid, wrap([this](const httplib::Request& req, httplib::Response& res) {
      service.delete_session(req.matches[1]);
      res.status = 204;
    }));
    server.Post(sid + "/attributions", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.upload_attributions(req.matches[1], req.body, ingest_from(req)));
    }));
    server.Post(sid + "/pipeline", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto out = service.run_pipeline(req.matches[1], parse_body(req));
      reply(res, out.status, out.body);
    }));
    server.Get(sid + R"(/jobs/([A-Za-z0-9-]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.job_status(req.matches[1], req.matches[2]));
    }));
    server.Get(sid + "/layout", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.layout(req.matches[1]));
    }));
    server.Get(sid + "/partition", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.partition(req.matches[1]));
    }));
    server.Get(sid + "/ranking", wrap([this](const httplib::Request& req, httplib::Response& res) {
      const auto basis = req.has_param("basis") ? req.get_param_value("basis") : std::string("deviation");
      std::optional<int> group;
      if (req.has_param("group")) group = parse_int(req.get_param_value("group"), "group");
      reply(res, 200, service.ranking(req.matches[1], basis, group));
    }));
    server.Get(sid + "/histograms", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.histograms(req.matches[1]));
    }));
    server.Put(sid + "/selection", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.set_selection(req.matches[1], parse_body(req)));
    }));
    server.Get(sid + "/selection", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.selection(req.matches[1]));
    }));
    server.Get(sid + "/selection/instances", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.selected_instances(req.matches[1]));
    }));
    server.Get(sid + "/selection/groups", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.selected_groups(req.matches[1]));
    }));
    server.Get(sid + "/selection/split", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.selection_split(req.matches[1]));
    }));
    server.Post(sid + "/subpopulations", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 201, service.add_subpopulation(req.matches[1]));
    }));
    server.Delete(sid + R"(/subpopulations/(-?\d+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.remove_subpopulation(req.matches[1], parse_int(req.matches[2], "group")));
    }));
    server.Post(sid + "/snapshot", wrap([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 201, service.save_snapshot(req.matches[1]));
    }));

    // The UI may be served from another origin during development.
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty() && res.status == 404) {
        reply(res, 404, ApiError(404, "not_found", "no such route").body());
      }
    });
  }
};

HttpServer::HttpServer(SessionService& service, HttpOptions options) : impl_(std::make_unique<Impl>(service)) {
  impl_->routes();
  if (options.ui_dir && !impl_->server.set_mount_point("/", *options.ui_dir)) {
    throw std::runtime_error("UI directory does not exist: " + *options.ui_dir);
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpServer::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace subplex
