#include <gtest/gtest.h>

#include <sstream>
#include <thread>

#include "subplex/bench.hpp"
#include "subplex/http_server.hpp"
#include "support.hpp"

// After Eigen: the resolver headers pulled in here define a `_res` macro.
#include "httplib.h"

using namespace subplex;

namespace {

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(60, 0);
  }

  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string new_session() {
    const auto res = client_->Post("/sessions");
    EXPECT_EQ(res->status, 201);
    return Json::parse(res->body)["session_id"];
  }

  static std::string csv(std::size_t n) {
    const auto blobs = bench::gen_cluster_blobs({3, 6, n, 6.0, 3});
    std::ostringstream out;
    write_csv(out, export_selected_instances(subplex::testing::make_matrix(blobs.data), Selection::all(n)));
    return out.str();
  }

  SessionService service_;
  HttpServer server_{service_};
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_F(HttpTest, FullWorkflow) {
  const auto sid = new_session();
  const auto base = "/sessions/" + sid;

  auto res = client_->Post(base + "/attributions?id_column=id", csv(90), "text/csv");
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(Json::parse(res->body)["rows"], 90);

  res = client_->Post(base + "/pipeline", R"({"cluster":{"k":3}})", "application/json");
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(Json::parse(res->body)["group_count"], 3);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");

  res = client_->Get(base + "/layout");
  ASSERT_EQ(res->status, 200);
  auto layout = Json::parse(res->body);
  EXPECT_EQ(layout["points"].size(), 90u);
  EXPECT_EQ(layout["medoids"].size(), 3u);

  res = client_->Get(base + "/ranking?basis=mean&group=1");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["group"], 1);
  res = client_->Get(base + "/ranking?basis=deviation");
  EXPECT_EQ(res->status, 200);
  res = client_->Get(base + "/ranking?basis=mean");
  EXPECT_EQ(res->status, 422);
  res = client_->Get(base + "/ranking?basis=mean&group=x");
  EXPECT_EQ(res->status, 422);

  res = client_->Put(base + "/selection", R"({"indices":[3,1,2]})", "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["indices"], Json({1, 2, 3}));
  res = client_->Put(base + "/selection", R"({"indices":[90]})", "application/json");
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(Json::parse(res->body)["error"]["index"], 90);

  res = client_->Get(base + "/selection/instances");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["rows"].size(), 3u);
  res = client_->Get(base + "/selection/groups");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["groups"].size(), 3u);
  EXPECT_EQ(client_->Get(base + "/selection/split")->status, 200);
  EXPECT_EQ(client_->Get(base + "/histograms")->status, 200);
  EXPECT_EQ(client_->Get(base + "/partition")->status, 200);

  res = client_->Post(base + "/subpopulations");
  ASSERT_EQ(res->status, 201) << res->body;
  EXPECT_EQ(Json::parse(res->body)["group_count"], 4);
  layout = Json::parse(client_->Get(base + "/layout")->body);
  EXPECT_EQ(layout["medoids"].size(), 4u);

  res = client_->Delete(base + "/subpopulations/3");
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(Json::parse(res->body)["group_count"], 3);

  res = client_->Delete(base);
  EXPECT_EQ(res->status, 204);
  EXPECT_EQ(client_->Get(base + "/layout")->status, 404);
}

TEST_F(HttpTest, ErrorResponsesAreJson) {
  const auto sid = new_session();
  const auto base = "/sessions/" + sid;
  auto res = client_->Post(base + "/pipeline", "{not json", "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(Json::parse(res->body)["error"]["code"], "bad_json");

  res = client_->Post(base + "/pipeline", "{}", "application/json");
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(Json::parse(res->body)["error"]["code"], "no_attributions");

  res = client_->Post(base + "/attributions", "f1,f2\n1,oops\n", "text/csv");
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(Json::parse(res->body)["error"]["row"], 1);

  res = client_->Get("/nowhere");
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(Json::parse(res->body)["error"]["code"], "not_found");

  res = client_->Get("/sessions/0123456789abcdef0123456789abcdef/layout");
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(Json::parse(res->body)["error"]["code"], "unknown_session");

  res = client_->Options(base + "/selection");
  EXPECT_EQ(res->status, 204);
  EXPECT_NE(res->get_header_value("Access-Control-Allow-Methods").find("PUT"), std::string::npos);
}

TEST_F(HttpTest, JsonUploadAndJobPolling) {
  const auto sid = new_session();
  const auto base = "/sessions/" + sid;
  const auto res = client_->Post(
      base + "/attributions", R"({"instance_ids":["a","b","c","d"],"feature_names":["x","y"],"values":[[0,0],[0,1],[5,5],[5,6]]})",
      "application/json");
  ASSERT_EQ(res->status, 200) << res->body;
  const auto run = client_->Post(base + "/pipeline", R"({"cluster":{"k":2},"outliers":{"k_neighbors":2}})", "application/json");
  ASSERT_EQ(run->status, 200) << run->body;
  const auto job = Json::parse(run->body)["job_id"].get<std::string>();
  const auto status = client_->Get(base + "/jobs/" + job);
  ASSERT_EQ(status->status, 200);
  EXPECT_EQ(Json::parse(status->body)["status"], "done");
  EXPECT_EQ(client_->Get(base + "/jobs/job-42")->status, 404);
}
