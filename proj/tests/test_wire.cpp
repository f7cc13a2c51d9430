#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

// Eigen first: resolv.h, pulled in by httplib, defines a _res macro.
#include "revmine/embedding.hpp"
#include "revmine/gateway.hpp"
#include "httplib.h"

using namespace revmine;

namespace {

// Local HTTP server on an ephemeral port, stopped on destruction.
class FakeServer {
public:
    FakeServer() {
        port_ = server.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeServer() {
        server.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    httplib::Server server;

private:
    int port_ = 0;
    std::thread thread_;
};

BackendSpec remote_spec(const std::string& url, int retries = 3) {
    return backend_spec_from_json("remote", {{"endpoint", url + "/v1"},
                                             {"model", "test-model"},
                                             {"token_env", "REVMINE_TEST_TOKEN"},
                                             {"max_retries", retries},
                                             {"backoff_base_ms", 1},
                                             {"timeout_seconds", 5}});
}

Json chat_reply(const std::string& content) {
    return {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
}

}  // namespace

TEST(Wire, ChatRequestShapeAndAuth) {
    ::setenv("REVMINE_TEST_TOKEN", "sekret", 1);
    FakeServer fake;
    Json seen;
    std::string auth;
    fake.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen = Json::parse(req.body);
        auth = req.get_header_value("Authorization");
        res.set_content(chat_reply("hello back").dump(), "application/json");
    });
    RemoteBackend b(remote_spec(fake.url()));
    const auto r = b.complete({std::string("be brief"), "hello", 0.0, "t"});
    EXPECT_EQ(r.text, "hello back");
    EXPECT_EQ(r.attempt, 1);
    EXPECT_EQ(auth, "Bearer sekret");
    EXPECT_EQ(seen.at("model"), "test-model");
    EXPECT_EQ(seen.at("temperature"), 0.0);
    EXPECT_EQ(seen.at("messages")[0], Json({{"role", "system"}, {"content", "be brief"}}));
    EXPECT_EQ(seen.at("messages")[1], Json({{"role", "user"}, {"content", "hello"}}));
    ::unsetenv("REVMINE_TEST_TOKEN");
}

TEST(Wire, RetriesOn429ThenSucceeds) {
    FakeServer fake;
    int hits = 0;
    fake.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        if (++hits == 1) {
            res.status = 429;
            res.set_content("slow down", "text/plain");
            return;
        }
        res.set_content(chat_reply("ok").dump(), "application/json");
    });
    std::vector<std::chrono::milliseconds> sleeps;
    RemoteBackend b(remote_spec(fake.url()), [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    const auto r = b.complete({{}, "u", {}, "t"});
    EXPECT_EQ(r.text, "ok");
    EXPECT_EQ(r.attempt, 2);
    EXPECT_EQ(hits, 2);
    ASSERT_EQ(sleeps.size(), 1u);
    EXPECT_GE(sleeps[0].count(), 1);
}

TEST(Wire, ExhaustsRetriesOn5xx) {
    FakeServer fake;
    int hits = 0;
    fake.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 503;
    });
    RemoteBackend b(remote_spec(fake.url(), 2), [](std::chrono::milliseconds) {});
    EXPECT_THROW(b.complete({{}, "u", {}, "t"}), BackendExhausted);
    EXPECT_EQ(hits, 3);
}

TEST(Wire, ClientErrorIsNotRetried) {
    FakeServer fake;
    int hits = 0;
    fake.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 400;
        res.set_content("bad request", "text/plain");
    });
    RemoteBackend b(remote_spec(fake.url()), [](std::chrono::milliseconds) {});
    try {
        b.complete({{}, "u", {}, "t"});
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.status(), 400);
    }
    EXPECT_EQ(hits, 1);
}

TEST(Wire, UnreachableEndpointExhausts) {
    BackendSpec spec = remote_spec("http://127.0.0.1:1", 1);
    RemoteBackend b(spec, [](std::chrono::milliseconds) {});
    EXPECT_THROW(b.complete({{}, "u", {}, "t"}), BackendExhausted);
}

TEST(Wire, EmbeddingRequestShape) {
    FakeServer fake;
    Json seen;
    fake.server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
        seen = Json::parse(req.body);
        Json data = Json::array();
        for (std::size_t i = 0; i < seen.at("input").size(); ++i)
            data.push_back({{"index", i}, {"embedding", {1.0 + double(i), 0.5, 0.0}}});
        res.set_content(Json({{"data", data}}).dump(), "application/json");
    });
    ProviderSpec spec = provider_spec_from_json(
        {{"kind", "remote"}, {"endpoint", fake.url() + "/v1"}, {"model", "emb-1"}, {"batch_size", 2}});
    RemoteEmbeddingProvider p(spec);
    EXPECT_EQ(p.dim(), 0);
    const auto out = embed_batch(p, {"a", "b"});
    EXPECT_EQ(seen.at("model"), "emb-1");
    EXPECT_EQ(seen.at("input"), Json({"a", "b"}));
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[1][0], 2.0);
    EXPECT_EQ(p.dim(), 3);
    EXPECT_EQ(p.identity(), "remote:" + fake.url() + "/v1:emb-1");
}
