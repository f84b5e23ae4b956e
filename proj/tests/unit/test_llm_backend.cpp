#include <atomic>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <thread>

#include <gtest/gtest.h>

#include "actowl/dialogue/llm_backend.hpp"

using namespace actowl;
using namespace actowl::dialogue;

namespace {

/// Chat-completion stand-in: replays canned replies and records requests.
class FakeCompletions {
 public:
  FakeCompletions() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu_);
      requests_.push_back(nlohmann::json::parse(req.body));
      auth_.push_back(req.get_header_value("Authorization"));
      if (replies_.empty()) {
        res.status = 500;
        res.set_content("no reply queued", "text/plain");
        return;
      }
      auto [status, content] = replies_.front();
      replies_.pop_front();
      res.status = status;
      if (status == 200) {
        nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
        res.set_content(body.dump(), "application/json");
      } else {
        res.set_content(content, "text/plain");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeCompletions() {
    server_.stop();
    thread_.join();
  }

  void reply(std::string content, int status = 200) {
    std::lock_guard lock(mu_);
    replies_.emplace_back(status, std::move(content));
  }
  std::vector<nlohmann::json> requests() {
    std::lock_guard lock(mu_);
    return requests_;
  }
  std::vector<std::string> auth() {
    std::lock_guard lock(mu_);
    return auth_;
  }

  LlmConfig config() const {
    LlmConfig c;
    c.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    c.model = "test-model";
    c.token_env = "ACTOWL_TEST_FAKE_TOKEN";
    c.timeout_seconds = 5;
    return c;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::deque<std::pair<int, std::string>> replies_;
  std::vector<nlohmann::json> requests_;
  std::vector<std::string> auth_;
};

}  // namespace

TEST(Endpoint, Parse) {
  const auto e = Endpoint::parse("https://api.example.com/v1/chat/completions");
  EXPECT_EQ(e.origin, "https://api.example.com");
  EXPECT_EQ(e.path, "/v1/chat/completions");
  EXPECT_EQ(Endpoint::parse("http://localhost:9000").path, "/");
  EXPECT_THROW(Endpoint::parse("localhost:9000/x"), InputError);
  EXPECT_THROW(Endpoint::parse("ftp://host/x"), InputError);
}

TEST(LlmBackend, ClassifyRequestShapeAndAuth) {
  FakeCompletions fake;
  ::setenv("ACTOWL_TEST_FAKE_TOKEN", "sekret", 1);
  fake.reply("Owned_object = [Backpack]");
  LlmHttpBackend b(fake.config());
  const auto c = b.classify_shared_owned({"Clock", "Backpack"}, EnvironmentContext::Laboratory);
  ::unsetenv("ACTOWL_TEST_FAKE_TOKEN");
  EXPECT_EQ(c.owned, (std::set<std::string>{"Backpack"}));
  EXPECT_EQ(c.shared, (std::set<std::string>{"Clock"}));

  const auto reqs = fake.requests();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0]["model"], "test-model");
  EXPECT_EQ(reqs[0]["temperature"], 0.0);
  EXPECT_EQ(reqs[0]["messages"][0]["role"], "user");
  EXPECT_EQ(reqs[0]["messages"][0]["content"],
            render_classification_prompt({"Clock", "Backpack"}, EnvironmentContext::Laboratory));
  EXPECT_EQ(fake.auth()[0], "Bearer sekret");
}

TEST(LlmBackend, ParseFailureRetriesOnceThenSucceeds) {
  FakeCompletions fake;
  fake.reply("I believe the owner is tanaka.");
  fake.reply("answer_output = \"tanaka\"");
  LlmHttpBackend b(fake.config());
  QuestionRecord q;
  q.question_text = "Whose cup is this?";
  EXPECT_EQ(b.interpret_answer(q, "tanaka's", "sato", {"sato", "tanaka"}), AnswerLabel::owner("tanaka"));
  EXPECT_EQ(fake.requests().size(), 2u);
}

TEST(LlmBackend, ParseFailureTwiceSurfacesWithRawText) {
  FakeCompletions fake;
  fake.reply("no idea");
  fake.reply("still no idea");
  LlmHttpBackend b(fake.config());
  try {
    b.classify_shared_owned({"Clock"}, EnvironmentContext::Household);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.payload(), "still no idea");
  }
}

TEST(LlmBackend, HttpErrorIsBackendError) {
  FakeCompletions fake;
  fake.reply("overloaded", 503);
  LlmHttpBackend b(fake.config());
  EXPECT_THROW(b.generate_question({}, {}), BackendError);
}

TEST(LlmBackend, InterpretationOutsideUserListFails) {
  FakeCompletions fake;
  fake.reply("answer_output = \"zoe\"");
  LlmHttpBackend b(fake.config());
  EXPECT_THROW(b.interpret_answer({}, "zoe's", "sato", {"sato"}), InterpretationError);
}

TEST(LlmBackend, QuestionAndOwnerPrediction) {
  FakeCompletions fake;
  fake.reply("\"Whose red cup is this?\"");
  fake.reply("owner_output = [\"sato\", \"Shared\"]");
  LlmHttpBackend b(fake.config());
  ObjectRow r;
  r.class_name = "Cup";
  r.object_id = 3;
  const auto q = b.generate_question(r, {});
  EXPECT_EQ(q.question_text, "Whose red cup is this?");
  EXPECT_EQ(q.target_object_id, 3u);
  const auto owners = b.predict_owners({r, r}, {"sato"});
  EXPECT_EQ(owners, (std::vector<AnswerLabel>{AnswerLabel::owner("sato"), AnswerLabel::shared()}));
}

TEST(LlmBackend, UnreachableEndpoint) {
  LlmConfig c;
  c.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  c.timeout_seconds = 2;
  LlmHttpBackend b(c);
  EXPECT_THROW(b.classify_shared_owned({"Clock"}, EnvironmentContext::Household), BackendError);
}
