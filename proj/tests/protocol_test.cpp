#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <mutex>

#include "codevqa/backends/backend_server.hpp"
#include "codevqa/backends/cached_backend.hpp"
#include "codevqa/backends/http_backend.hpp"
#include "codevqa/backends/oracle_backend.hpp"
#include "codevqa/backends/protocol.hpp"
#include "codevqa/core/random.hpp"
#include "httplib.h"
#include "support/support.hpp"

namespace codevqa::backends {
namespace {

using testing::data_dir;
using testing::read_file;
using testing::scratch_dir;

// ---- Serialization -------------------------------------------------------

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {"a", "dog", " ", "\"q\"", "\xC2\xB0", "\n", "-", "to", "\\"};
  std::string s;
  const std::size_t n = uniform_index(rng, 6);
  for (std::size_t i = 0; i < n; ++i) s += pieces[uniform_index(rng, pieces.size())];
  return s;
}

double random_double(std::mt19937_64& rng) { return unit_draw(rng) * 200.0 - 100.0; }

gradcam::Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  gradcam::Matrix m(rows, cols);
  for (double& v : m.data) v = random_double(rng);
  return m;
}

template <typename T>
T round_trip(const T& value) {
  const json j = value;
  return decode<T>(json::parse(j.dump()));
}

TEST(ProtocolRoundTrip, RandomValuesSurviveEncoding) {
  auto rng = seeded_stream(17, 0);
  for (int trial = 0; trial < 200; ++trial) {
    CompleteRequest c{random_text(rng), random_text(rng), static_cast<int>(uniform_index(rng, 999)),
                      unit_draw(rng), {random_text(rng)}, {}};
    if (uniform_index(rng, 2)) c.logit_bias = {{random_text(rng), -100.0}, {"to", random_double(rng)}};
    ASSERT_EQ(round_trip(c), c);
    const CompleteResponse cr{random_text(rng) + "x"};
    ASSERT_EQ(round_trip(cr), cr);

    const AttentionRequest ar{random_text(rng), random_text(rng), static_cast<int>(uniform_index(rng, 12))};
    ASSERT_EQ(round_trip(ar), ar);
    const std::size_t t = 1 + uniform_index(rng, 4);
    const std::size_t p = 1 + uniform_index(rng, 10);
    AttentionResponse at{std::vector<std::string>(t, "w"), {0}, random_matrix(rng, t, p), random_matrix(rng, t, p)};
    ASSERT_EQ(round_trip(at), at);

    const CaptionRequest cap{random_text(rng), {uniform_index(rng, 576), uniform_index(rng, 576)}, rng()};
    ASSERT_EQ(round_trip(cap), cap);
    const CaptionResponse caps{{random_text(rng), random_text(rng)}};
    ASSERT_EQ(round_trip(caps), caps);

    const ItcRequest ir{random_text(rng), random_text(rng)};
    ASSERT_EQ(round_trip(ir), ir);
    const ItcResponse itc{random_double(rng)};
    ASSERT_EQ(round_trip(itc), itc);
    const DetectRequest dr{random_text(rng), random_text(rng)};
    ASSERT_EQ(round_trip(dr), dr);
    const DetectResponse det{{{random_text(rng), 0.1, 0.2, 0.3, 0.4, unit_draw(rng)}}};
    ASSERT_EQ(round_trip(det), det);
    const EmbedRequest er{random_text(rng)};
    ASSERT_EQ(round_trip(er), er);
    const EmbedResponse emb{{random_double(rng), random_double(rng)}};
    ASSERT_EQ(round_trip(emb), emb);
    const Description d{1 + static_cast<int>(uniform_index(rng, 30)), 1 + static_cast<int>(uniform_index(rng, 30)),
                        static_cast<int>(uniform_index(rng, 128)), random_text(rng)};
    ASSERT_EQ(round_trip(d), d);
  }
}

TEST(ProtocolRoundTrip, LogitBiasSerializedVerbatim) {
  CompleteRequest c;
  c.prompt = "Question: Which football team has won the most Super Bowls?\nAnswer:";
  c.logit_bias = {{"-", -100.0}, {"to", -100.0}, {"\xC2\xB0", -100.0}};
  const json j = c;
  ASSERT_TRUE(j.contains("logit_bias"));
  EXPECT_EQ(j["logit_bias"], json::parse(R"({"-":-100.0,"to":-100.0,"°":-100.0})"));
  c.logit_bias.clear();
  EXPECT_FALSE(json(c).contains("logit_bias"));
}

TEST(ProtocolRoundTrip, MissingFieldIsProtocolError) {
  try {
    decode<CompleteRequest>(json::parse(R"({"model":"m"})"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::kProtocol);
  }
  EXPECT_THROW(decode<ItcResponse>(json::parse(R"({"score":"high"})")), BackendError);
  EXPECT_THROW(decode<AttentionResponse>(json::parse(R"({"tokens":["a"],"attention":[[1,2],[3]],"gradient":[[1,2]]})")),
               BackendError);
}

TEST(ProtocolValidation, AttentionShape) {
  const Description d{24, 24, 8, ""};
  AttentionResponse ok{{"[CLS]", "a", "dog"}, {0}, gradcam::Matrix(3, 576, 0.1), gradcam::Matrix(3, 576, 0.2)};
  EXPECT_NO_THROW(validate(ok, d));
  AttentionResponse narrow = ok;
  narrow.attention = gradcam::Matrix(3, 575);
  narrow.gradient = gradcam::Matrix(3, 575);
  EXPECT_THROW(validate(narrow, d), BackendError);
  AttentionResponse rows = ok;
  rows.tokens.pop_back();
  EXPECT_THROW(validate(rows, d), BackendError);
  AttentionResponse negative = ok;
  negative.attention.at(1, 5) = -1.0;
  EXPECT_THROW(validate(negative, d), BackendError);
}

TEST(ProtocolValidation, OtherShapes) {
  EXPECT_THROW(validate(EmbedResponse{{1.0, 2.0}}, Description{24, 24, 3, ""}), BackendError);
  EXPECT_NO_THROW(validate(EmbedResponse{{1.0, 2.0, 3.0}}, Description{24, 24, 3, ""}));
  EXPECT_THROW(validate(DetectResponse{{{"dog", 0.5, 0.1, 0.2, 0.3, 0.9}}}), BackendError);
  EXPECT_THROW(validate(DetectResponse{{{"dog", 0.1, 0.1, 0.2, 0.3, 1.5}}}), BackendError);
  EXPECT_THROW(validate(Description{0, 24, 8, ""}), BackendError);
}

// ---- Server and client ----------------------------------------------------

SceneLibrary golden_scenes() { return load_scenes(data_dir() / "protocol" / "scenes.json"); }

std::shared_ptr<OracleBackend> golden_oracle() {
  OracleOptions options;
  options.grid_w = 4;
  options.grid_h = 3;
  options.embed_dim = 8;
  options.knowledge = {{"Which football team has won the most Super Bowls?", "new england patriots"}};
  return std::make_shared<OracleBackend>(golden_scenes(), options);
}

HttpOptions client_options(int port) {
  HttpOptions o;
  o.base_url = "http://127.0.0.1:" + std::to_string(port);
  o.timeout_ms = 5000;
  o.initial_backoff_ms = 1;
  return o;
}

TEST(HttpBackend, RoundTripEqualsInProcessBackend) {
  auto oracle = golden_oracle();
  BackendServer server(oracle);
  const int port = server.start();
  HttpBackend client(client_options(port));

  EXPECT_EQ(client.describe(), oracle->describe());
  const AttentionRequest ar{"street.jpg", "the red umbrella", 6};
  const AttentionResponse remote = client.attention(ar);
  EXPECT_EQ(remote, oracle->attention(ar));
  EXPECT_EQ(remote.attention.cols, 12u);
  EXPECT_EQ(remote.attention.rows, remote.tokens.size());
  EXPECT_EQ(client.caption({"kitchen.jpg", {1, 6, 6}, 9}), oracle->caption({"kitchen.jpg", {1, 6, 6}, 9}));
  EXPECT_EQ(client.itc({"street.jpg", "woman holding umbrella"}), oracle->itc({"street.jpg", "woman holding umbrella"}));
  EXPECT_EQ(client.detect({"street.jpg", "dog"}), oracle->detect({"street.jpg", "dog"}));
  EXPECT_EQ(client.embed({"What color is the cup?"}), oracle->embed({"What color is the cup?"}));
  CompleteRequest knowledge{"Question: Which football team has won the most Super Bowls?\nAnswer:", "m", 16, 0.0, {}, {}};
  EXPECT_EQ(client.complete(knowledge), oracle->complete(knowledge));
}

TEST(HttpBackend, AttentionShapesForSampleInputs) {
  auto oracle = golden_oracle();
  BackendServer server(oracle);
  HttpBackend client(client_options(server.start()));
  for (const std::string text : {"dog", "the tall woman", "is the white cup left of the blue plate"}) {
    const auto r = client.attention({"kitchen.jpg", text, 6});
    EXPECT_EQ(r.attention.rows, r.tokens.size());
    EXPECT_EQ(r.attention.cols, 12u) << text;
    EXPECT_EQ(r.gradient.rows, r.attention.rows);
    EXPECT_EQ(r.gradient.cols, r.attention.cols);
  }
}

TEST(HttpBackend, RemoteErrorIsNotRetried) {
  auto oracle = golden_oracle();
  BackendServer server(oracle);
  HttpBackend client(client_options(server.start()));
  try {
    client.attention({"missing.jpg", "dog", 6});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::kRemote);
  }
}

TEST(HttpBackend, UnreachableIsTransport) {
  HttpOptions o = client_options(1);
  o.max_attempts = 2;
  o.timeout_ms = 500;
  HttpBackend client(o);
  try {
    client.describe();
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_TRUE(e.transient());
  }
}

// Fails transiently for the first `failures` calls, then delegates.
class FlakyBackend : public OracleBackend {
 public:
  FlakyBackend(SceneLibrary scenes, OracleOptions options, int failures)
      : OracleBackend(std::move(scenes), options), remaining_(failures) {}

  ItcResponse itc(const ItcRequest& request) override {
    ++calls;
    if (remaining_-- > 0) throw BackendError(BackendErrorKind::kTransport, "model host busy");
    return OracleBackend::itc(request);
  }

  std::atomic<int> calls{0};

 private:
  std::atomic<int> remaining_;
};

TEST(HttpBackend, TransientFailuresAreRetriedWithinBudget) {
  OracleOptions options;
  options.grid_w = 4;
  options.grid_h = 3;
  auto flaky = std::make_shared<FlakyBackend>(golden_scenes(), options, 2);
  BackendServer server(flaky);
  HttpOptions o = client_options(server.start());
  o.max_attempts = 3;
  HttpBackend client(o);
  EXPECT_NO_THROW(client.itc({"street.jpg", "dog"}));
  EXPECT_EQ(flaky->calls.load(), 3);
}

TEST(HttpBackend, TransientFailuresBeyondBudgetSurface) {
  OracleOptions options;
  options.grid_w = 4;
  options.grid_h = 3;
  auto flaky = std::make_shared<FlakyBackend>(golden_scenes(), options, 5);
  BackendServer server(flaky);
  HttpOptions o = client_options(server.start());
  o.max_attempts = 2;
  HttpBackend client(o);
  EXPECT_THROW(client.itc({"street.jpg", "dog"}), BackendError);
  EXPECT_EQ(flaky->calls.load(), 2);
}

TEST(HttpBackend, MismatchedAttentionWidthIsProtocolError) {
  httplib::Server fake;
  fake.Get("/v1/describe", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"grid_w":4,"grid_h":3,"embed_dim":8,"special_token_rule":""})", "application/json");
  });
  fake.Post("/v1/attention", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"tokens":["dog"],"special_positions":[],"attention":[[1,1,1]],"gradient":[[1,1,1]]})",
                    "application/json");
  });
  const int port = fake.bind_to_any_port("127.0.0.1");
  std::thread t([&] { fake.listen_after_bind(); });
  fake.wait_until_ready();
  HttpBackend client(client_options(port));
  try {
    client.attention({"x.jpg", "dog", 6});
    ADD_FAILURE() << "accepted a 1x3 matrix on a 3x4 grid";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::kProtocol);
  }
  fake.stop();
  t.join();
}

TEST(HttpBackend, BearerTokenComesFromEnvironmentAndStaysOutOfErrors) {
  const std::string secret = "sk-test-3b1f5c";
  ::setenv("CODEVQA_TEST_TOKEN", secret.c_str(), 1);
  std::mutex lock;
  std::string seen;
  httplib::Server fake;
  fake.Post("/v1/itc", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard g(lock);
    seen = req.get_header_value("Authorization");
    res.status = 401;
    res.set_content(R"({"error":{"capability":"itc","message":"denied"}})", "application/json");
  });
  const int port = fake.bind_to_any_port("127.0.0.1");
  std::thread t([&] { fake.listen_after_bind(); });
  fake.wait_until_ready();
  HttpOptions o = client_options(port);
  o.api_key_env = "CODEVQA_TEST_TOKEN";
  HttpBackend client(o);
  try {
    client.itc({"x.jpg", "dog"});
    ADD_FAILURE();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendErrorKind::kRemote);
    EXPECT_EQ(std::string(e.what()).find(secret), std::string::npos);
  }
  fake.stop();
  t.join();
  EXPECT_EQ(seen, "Bearer " + secret);
  ::unsetenv("CODEVQA_TEST_TOKEN");
}

TEST(BackendServer, MalformedRequestIs400WithErrorBody) {
  BackendServer server(golden_oracle());
  httplib::Client raw("127.0.0.1", server.start());
  auto res = raw.Post("/v1/itc", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  const json body = json::parse(res->body);
  EXPECT_EQ(body["error"]["capability"], "itc");
  res = raw.Post("/v1/itc", R"({"text":"dog"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

// ---- Golden fixtures ------------------------------------------------------

struct GoldenCall {
  std::string name;
  std::string route;
  json request;  // null for GET
};

std::vector<GoldenCall> golden_calls() {
  return {
      {"describe", "/v1/describe", nullptr},
      {"complete_knowledge", "/v1/complete",
       json::parse(R"({"prompt":"Question: Which football team has won the most Super Bowls?\nAnswer:",
                       "model":"code-davinci-002","max_tokens":16,"temperature":0.0,"stop":["\n"],
                       "logit_bias":{"-":-100.0,"to":-100.0,"°":-100.0}})")},
      {"complete_qa", "/v1/complete",
       json::parse(R"({"prompt":"Image captions:\n[kitchen.jpg] a white cup\nQuestion: What color is the cup?\nAnswer:",
                       "model":"code-davinci-002","max_tokens":16,"temperature":0.0,"stop":["\n"]})")},
      {"attention", "/v1/attention", json::parse(R"({"image_ref":"street.jpg","text":"red umbrella","layer":6})")},
      {"caption", "/v1/caption", json::parse(R"({"image_ref":"kitchen.jpg","patches":[6,6,7,1],"seed":42})")},
      {"itc", "/v1/itc", json::parse(R"({"image_ref":"street.jpg","text":"woman holding umbrella"})")},
      {"detect", "/v1/detect", json::parse(R"({"image_ref":"street.jpg","text":"dog"})")},
      {"embed", "/v1/embed", json::parse(R"({"text":"How many cups are there?"})")},
  };
}

TEST(GoldenProtocol, MockMatchesRecordedFixtures) {
  BackendServer server(golden_oracle());
  httplib::Client raw("127.0.0.1", server.start());
  for (const GoldenCall& call : golden_calls()) {
    auto res = call.request.is_null() ? raw.Get(call.route) : raw.Post(call.route, call.request.dump(), "application/json");
    ASSERT_TRUE(res) << call.name;
    ASSERT_EQ(res->status, 200) << call.name << ": " << res->body;
    const json response = json::parse(res->body);
    const auto path = data_dir() / "protocol" / (call.name + ".json");
    if (testing::updating_goldens()) {
      testing::write_file(path, json{{"route", call.route}, {"request", call.request}, {"response", response}}.dump(2) + "\n");
      continue;
    }
    const json golden = json::parse(read_file(path));
    EXPECT_EQ(golden["route"], call.route);
    EXPECT_EQ(golden["request"], call.request) << call.name;
    EXPECT_EQ(response, golden["response"]) << call.name;
  }
}

TEST(GoldenProtocol, FixturesDecodeIntoTypedValues) {
  if (testing::updating_goldens()) GTEST_SKIP();
  auto load = [](const std::string& name) { return json::parse(read_file(data_dir() / "protocol" / (name + ".json"))); };
  const Description d = decode<Description>(load("describe")["response"]);
  EXPECT_EQ(d.grid_w, 4);
  EXPECT_EQ(d.grid_h, 3);
  const auto att = decode<AttentionResponse>(load("attention")["response"]);
  EXPECT_NO_THROW(validate(att, d));
  EXPECT_EQ(decode<CompleteRequest>(load("complete_knowledge")["request"]).logit_bias.size(), 3u);
  EXPECT_NO_THROW(validate(decode<DetectResponse>(load("detect")["response"])));
  EXPECT_NO_THROW(validate(decode<EmbedResponse>(load("embed")["response"]), d));
  // Every golden re-encodes to the exact same JSON.
  EXPECT_EQ(json(decode<CaptionRequest>(load("caption")["request"])), load("caption")["request"]);
  EXPECT_EQ(json(att), load("attention")["response"]);
}

// ---- Cache -----------------------------------------------------------------

class CountingBackend : public OracleBackend {
 public:
  using OracleBackend::OracleBackend;
  CompleteResponse complete(const CompleteRequest& r) override {
    ++upstream;
    return OracleBackend::complete(r);
  }
  ItcResponse itc(const ItcRequest& r) override {
    ++upstream;
    return OracleBackend::itc(r);
  }
  AttentionResponse attention(const AttentionRequest& r) override {
    ++upstream;
    return OracleBackend::attention(r);
  }
  std::atomic<int> upstream{0};
};

std::shared_ptr<CountingBackend> counting() {
  OracleOptions options;
  options.grid_w = 4;
  options.grid_h = 3;
  options.knowledge = {{"Who?", "nobody"}};
  return std::make_shared<CountingBackend>(golden_scenes(), options);
}

TEST(CachedBackend, HitSkipsUpstream) {
  auto inner = counting();
  CachedBackend cache(inner, scratch_dir("cache-hit"), "oracle|m");
  const CompleteRequest r{"Question: Who?\nAnswer:", "m", 8, 0.0, {}, {}};
  const auto first = cache.complete(r);
  const auto second = cache.complete(r);
  EXPECT_EQ(first, second);
  EXPECT_EQ(inner->upstream.load(), 1);
  EXPECT_EQ(cache.stats().hits.load(), 1);
  EXPECT_EQ(cache.stats().misses.load(), 1);
}

TEST(CachedBackend, ReplayAcrossInstancesIsByteIdentical) {
  const auto dir = scratch_dir("cache-replay");
  auto inner = counting();
  const AttentionRequest r{"street.jpg", "tall woman", 6};
  AttentionResponse fresh;
  {
    CachedBackend cache(inner, dir, "oracle|m");
    fresh = cache.attention(r);
  }
  CachedBackend again(inner, dir, "oracle|m");
  EXPECT_EQ(again.attention(r), fresh);
  EXPECT_EQ(inner->upstream.load(), 1);
}

TEST(CacheKey, FieldOrderDoesNotMatter) {
  const json a = json::parse(R"({"image_ref":"x.jpg","text":"dog","layer":6})");
  // Built by hand in another order, then re-parsed: an independent serializer.
  const json b = json::parse("{\"layer\":6,\"text\":\"dog\",\"image_ref\":\"x.jpg\"}");
  EXPECT_EQ(cache_key("attention", a, "m"), cache_key("attention", b, "m"));
  EXPECT_NE(cache_key("attention", a, "m"), cache_key("attention", a, "other-model"));
  EXPECT_NE(cache_key("attention", a, "m"), cache_key("attention", a, "m", "codevqa-engine/0.9"));
  EXPECT_NE(cache_key("attention", a, "m"), cache_key("caption", a, "m"));
  EXPECT_EQ(cache_key("attention", a, "m").size(), 64u);
}

TEST(CacheKey, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CachedBackend, CorruptEntryIsRecomputedAndReplaced) {
  const auto dir = scratch_dir("cache-corrupt");
  auto inner = counting();
  std::vector<std::string> warnings;
  CachedBackend cache(inner, dir, "oracle|m", [&](const std::string& w) { warnings.push_back(w); });
  const ItcRequest r{"street.jpg", "red umbrella"};
  const auto good = cache.itc(r);
  const std::string key = cache_key("itc", json(r), "oracle|m");
  ASSERT_TRUE(std::filesystem::exists(cache.entry_path(key)));
  testing::write_file(cache.entry_path(key), "{\"key\": truncated");
  EXPECT_EQ(cache.itc(r), good);
  EXPECT_EQ(inner->upstream.load(), 2);
  EXPECT_EQ(cache.stats().corrupt.load(), 1);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_NO_THROW(json::parse(read_file(cache.entry_path(key))));
  EXPECT_EQ(cache.itc(r), good);
  EXPECT_EQ(inner->upstream.load(), 2);
}

TEST(CachedBackend, ObservationallyEquivalentToInner) {
  auto inner = counting();
  CachedBackend cache(inner, scratch_dir("cache-equiv"), "oracle|m");
  auto rng = seeded_stream(4, 0);
  const std::vector<std::string> texts = {"dog", "cup", "white cup", "woman holding umbrella", "plate"};
  for (int i = 0; i < 40; ++i) {
    const std::string ref = uniform_index(rng, 2) ? "street.jpg" : "kitchen.jpg";
    const std::string text = texts[uniform_index(rng, texts.size())];
    ASSERT_EQ(cache.itc({ref, text}), inner->OracleBackend::itc({ref, text}));
    ASSERT_EQ(cache.detect({ref, text}), inner->detect({ref, text}));
  }
}

}  // namespace
}  // namespace codevqa::backends
