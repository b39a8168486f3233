#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include "keydyn/harness/synthetic.hpp"
#include "keydyn/service/http.hpp"
#include "keydyn/service/service.hpp"

using namespace keydyn;
using namespace keydyn::service;

namespace {

harness::SyntheticProfile profile(std::string id, double hold, double flight) {
  harness::SyntheticProfile p;
  p.user_id = std::move(id);
  p.hold_mean = hold;
  p.hold_std = 8;
  p.flight_mean = flight;
  p.flight_std = 12;
  p.text = harness::keys_of("password");
  return p;
}

std::vector<KeystrokeSample> typing(const harness::SyntheticProfile& p, std::size_t n, std::uint64_t seed) {
  return harness::generate_synthetic({p}, n, seed).samples;
}

/// Deterministic clock that advances one millisecond per call.
VerificationService::Clock ticking() {
  auto t = std::make_shared<std::int64_t>(1000);
  return [t] { return (*t)++; };
}

std::filesystem::path temp_store(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("keydyn-test-" + name + ".json");
  std::filesystem::remove(p);
  return p;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

class Enrolled : public ::testing::Test {
 protected:
  void SetUp() override {
    for (auto& s : typing(alice, 5, 1)) svc.enroll("alice", s);
  }
  harness::SyntheticProfile alice = profile("alice", 100, 120);
  VerificationService svc{ServiceConfig{}, ticking()};
};

}  // namespace

TEST(Service, FifthSampleTrains) {
  VerificationService svc(ServiceConfig{}, ticking());
  const auto samples = typing(profile("bob", 100, 120), 5, 2);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_FALSE(svc.enroll("bob", samples[i]).trained);
  const auto st = svc.enroll("bob", samples[4]);
  EXPECT_TRUE(st.trained);
  EXPECT_EQ(st.samples, 5u);
}

TEST(Service, DuplicateSampleIdIsNoOp) {
  VerificationService svc(ServiceConfig{}, ticking());
  const auto samples = typing(profile("bob", 100, 120), 2, 2);
  svc.enroll("bob", samples[0]);
  EXPECT_EQ(svc.enroll("bob", samples[0]).samples, 1u);
  EXPECT_EQ(svc.enroll("bob", samples[1]).samples, 2u);
}

TEST(Service, InvalidSampleCarriesViolations) {
  VerificationService svc(ServiceConfig{}, ticking());
  auto s = typing(profile("bob", 100, 120), 1, 2)[0];
  s.events[0].up_ms = s.events[0].down_ms;
  try {
    svc.enroll("bob", s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidSample);
    ASSERT_FALSE(e.details().empty());
    EXPECT_EQ(e.details()[0], "up_ms must exceed down_ms at index 0");
  }
  EXPECT_TRUE(svc.list_users().empty());
}

TEST(Service, VerifyBeforeTrainingAndUnknownUser) {
  VerificationService svc(ServiceConfig{}, ticking());
  const auto samples = typing(profile("bob", 100, 120), 2, 2);
  svc.enroll("bob", samples[0]);
  EXPECT_EQ(code_of([&] { svc.verify("bob", samples[1]); }), ErrorCode::NotTrained);
  EXPECT_EQ(code_of([&] { svc.verify("nobody", samples[1]); }), ErrorCode::UnknownUser);
}

TEST_F(Enrolled, GenuineAcceptedFarProfileRejected) {
  const auto stored = svc.snapshot("alice")->samples[0];
  EXPECT_EQ(svc.verify("alice", stored).decision, Decision::ACCEPT);
  for (auto& s : typing(alice, 5, 99)) EXPECT_EQ(svc.verify("alice", s).decision, Decision::ACCEPT);
  for (auto& s : typing(profile("mallory", 260, 450), 5, 98)) {
    EXPECT_EQ(svc.verify("alice", s).decision, Decision::REJECT);
  }
}

TEST_F(Enrolled, VerifyDoesNotChangeTemplate) {
  const auto before = svc.snapshot("alice");
  for (auto& s : typing(alice, 4, 7)) svc.verify("alice", s);
  const auto after = svc.snapshot("alice");
  EXPECT_EQ(template_to_json(*before->tmpl), template_to_json(*after->tmpl));
  ASSERT_EQ(after->audit.size(), 4u);
  for (std::size_t i = 1; i < after->audit.size(); ++i) {
    EXPECT_GT(after->audit[i].timestamp_ms, after->audit[i - 1].timestamp_ms);
  }
}

TEST_F(Enrolled, ShortProbeIsInvalid) {
  auto s = typing(alice, 1, 3)[0];
  s.events.resize(2);
  EXPECT_EQ(code_of([&] { svc.verify("alice", s); }), ErrorCode::InvalidSample);
}

TEST(Service, ListAndReset) {
  VerificationService svc(ServiceConfig{}, ticking());
  EXPECT_TRUE(svc.list_users().empty());
  svc.enroll("bob", typing(profile("bob", 100, 120), 1, 2)[0]);
  const auto users = svc.list_users();
  ASSERT_EQ(users.size(), 1u);
  EXPECT_EQ(users[0].user_id, "bob");
  EXPECT_FALSE(users[0].trained);
  svc.reset("bob");
  EXPECT_TRUE(svc.list_users().empty());
  EXPECT_EQ(code_of([&] { svc.reset("bob"); }), ErrorCode::UnknownUser);
}

TEST(Service, EveryClassifierTrains) {
  for (auto kind : {ClassifierKind::MVP, ClassifierKind::DVC, ClassifierKind::SVM}) {
    ServiceConfig cfg;
    cfg.classifier = kind;
    VerificationService svc(cfg, ticking());
    const auto p = profile("carol", 110, 100);
    for (auto& s : typing(p, 6, 4)) svc.enroll("carol", s);
    ASSERT_TRUE(svc.snapshot("carol")->trained()) << to_string(kind);
    EXPECT_EQ(svc.verify("carol", typing(p, 1, 77)[0]).decision, Decision::ACCEPT) << to_string(kind);
    EXPECT_EQ(svc.verify("carol", typing(profile("x", 300, 500), 1, 78)[0]).decision, Decision::REJECT)
        << to_string(kind);
  }
}

TEST(Service, RestartGivesIdenticalScore) {
  ServiceConfig cfg;
  cfg.store_path = temp_store("restart");
  const auto p = profile("dave", 90, 140);
  const auto probe = typing(p, 1, 50)[0];
  double before = 0;
  {
    VerificationService svc(cfg, ticking());
    for (auto& s : typing(p, 5, 5)) svc.enroll("dave", s);
    before = svc.verify("dave", probe).score;
  }
  VerificationService again(cfg, ticking());
  ASSERT_TRUE(again.snapshot("dave")->trained());
  EXPECT_EQ(again.verify("dave", probe).score, before);
  EXPECT_EQ(again.snapshot("dave")->audit.size(), 2u);
  std::filesystem::remove(cfg.store_path);
}

TEST(Service, ConcurrentEnrollments) {
  ServiceConfig cfg;
  cfg.store_path = temp_store("concurrent");
  VerificationService svc(cfg, ticking());
  std::vector<std::thread> threads;
  for (int u = 0; u < 4; ++u) {
    threads.emplace_back([&svc, u] {
      const auto id = "user" + std::to_string(u);
      for (auto& s : typing(profile(id, 80 + 40 * u, 120), 6, u)) svc.enroll(id, s);
    });
  }
  for (auto& t : threads) t.join();
  const auto users = svc.list_users();
  ASSERT_EQ(users.size(), 4u);
  for (const auto& u : users) {
    EXPECT_EQ(u.samples, 6u);
    EXPECT_TRUE(u.trained);
  }
  VerificationService reread(cfg, ticking());
  EXPECT_EQ(reread.list_users().size(), 4u);
  std::filesystem::remove(cfg.store_path);
}

TEST(Serialization, SampleRoundTrip) {
  auto s = typing(profile("eve", 100, 120), 1, 6)[0];
  s.events[0].x = 3.5;
  EXPECT_EQ(sample_from_json(sample_to_json(s)).events, s.events);
  EXPECT_EQ(code_of([] { sample_from_json(json{{"user_id", "x"}}); }), ErrorCode::BadRequest);
}

// ---------------------------------------------------------------------------
// HTTP

class Http : public ::testing::Test {
 protected:
  void SetUp() override {
    install_routes(server, svc);
    port = server.bind_to_any_port("127.0.0.1");
    worker = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  void TearDown() override {
    server.stop();
    worker.join();
  }
  httplib::Client client() { return httplib::Client("127.0.0.1", port); }

  VerificationService svc{ServiceConfig{}, ticking()};
  httplib::Server server;
  std::thread worker;
  int port = 0;
};

TEST_F(Http, EnrollVerifyListReset) {
  auto c = client();
  const auto p = profile("frank", 100, 120);
  for (auto& s : typing(p, 5, 8)) {
    const auto r = c.Post("/api/enroll", sample_to_json(s).dump(), "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
  }
  auto probe = typing(p, 1, 9)[0];
  auto r = c.Post("/api/verify", sample_to_json(probe).dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body).at("decision"), "ACCEPT");

  r = c.Get("/api/users");
  const auto users = json::parse(r->body).at("users");
  ASSERT_EQ(users.size(), 1u);
  EXPECT_EQ(users[0].at("trained"), true);

  r = c.Delete("/api/users/frank");
  EXPECT_EQ(r->status, 200);
  r = c.Delete("/api/users/frank");
  EXPECT_EQ(r->status, 404);
}

TEST_F(Http, ErrorMapping) {
  auto c = client();
  auto r = c.Post("/api/enroll", "{not json", "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(json::parse(r->body).at("error_code"), "BadRequest");

  auto s = typing(profile("gina", 100, 120), 1, 10)[0];
  r = c.Post("/api/verify", sample_to_json(s).dump(), "application/json");
  EXPECT_EQ(r->status, 404);

  c.Post("/api/enroll", sample_to_json(s).dump(), "application/json");
  r = c.Post("/api/verify", sample_to_json(s).dump(), "application/json");
  EXPECT_EQ(r->status, 409);

  s.events[0].up_ms = -1;
  r = c.Post("/api/enroll", sample_to_json(s).dump(), "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_TRUE(json::parse(r->body).contains("details"));

  r = c.Get("/api/health");
  EXPECT_EQ(r->status, 200);
}
