#pragma once

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "actowl/detail/http.hpp"
#include <json.hpp>

#include "actowl/dialogue/backend.hpp"
#include "actowl/dialogue/prompts.hpp"
#include "actowl/dialogue/text.hpp"

namespace actowl::dialogue {

struct LlmConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4-0613";
  double temperature = 0.0;
  std::string token_env = "ACTOWL_LLM_TOKEN";
  int timeout_seconds = 60;
};

/// Split of an http(s) URL into what httplib::Client wants.
struct Endpoint {
  std::string origin;  ///< scheme://host[:port]
  std::string path;

  static Endpoint parse(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InputError("endpoint must be an http(s) URL: " + url);
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw InputError("unsupported endpoint scheme: " + scheme);
    auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = url.substr(0, path_start);
    e.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    return e;
  }
};

/// Chat-completion backend. Each capability renders its prompt, posts
/// {model, messages:[{role:"user", content}], temperature}, and parses the
/// first choice's message content.
class LlmHttpBackend : public DialogueBackend {
 public:
  explicit LlmHttpBackend(LlmConfig config) : config_(std::move(config)), endpoint_(Endpoint::parse(config_.endpoint)) {}

  std::string name() const override { return "llm"; }
  const LlmConfig& config() const { return config_; }

  static nlohmann::json request_body(const std::string& model, double temperature, const std::string& prompt) {
    return {{"model", model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", temperature}};
  }

  /// One round trip; returns the first message content.
  std::string complete(const std::string& prompt) {
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (const char* token = std::getenv(config_.token_env.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);

    const std::string body = request_body(config_.model, config_.temperature, prompt).dump();
    auto res = client.Post(endpoint_.path, headers, body, "application/json");
    if (!res) throw BackendError("LLM request failed: " + httplib::to_string(res.error()), body);
    if (res->status < 200 || res->status >= 300)
      throw BackendError("LLM endpoint returned HTTP " + std::to_string(res->status), res->body);
    try {
      auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("malformed chat-completion response: ") + e.what(), res->body);
    }
  }

  /// Parse failures get exactly one retry before surfacing as ParseError.
  template <class Parser>
  auto with_retry(const std::string& prompt, Parser parser) {
    std::string last;
    for (int attempt = 0; attempt < 2; ++attempt) {
      last = complete(prompt);
      if (auto parsed = parser(last)) return *parsed;
    }
    throw ParseError("could not parse LLM output after one retry", last);
  }

  Classification classify_shared_owned(const std::vector<std::string>& classes, EnvironmentContext ctx) override {
    Classification out;
    if (classes.empty()) return out;
    const auto owned_names = with_retry(render_classification_prompt(classes, ctx), [](const std::string& c) {
      return parse::bracket_list(c, "Owned_object");
    });
    std::set<std::string> owned_lower;
    for (const auto& o : owned_names) owned_lower.insert(text::lower(o));
    for (const auto& c : classes) {
      if (owned_lower.contains(text::lower(c))) {
        out.owned.insert(c);
      } else {
        out.shared.insert(c);
      }
    }
    return out;
  }

  QuestionRecord generate_question(const ObjectRow& target, const std::vector<ObjectRow>& others) override {
    QuestionRecord q;
    q.target_object_id = target.object_id;
    q.target = target;
    q.context_objects = others;
    q.question_text = text::strip_quotes(complete(render_question_prompt(target, others)));
    if (q.question_text.empty()) throw GenerationError("LLM returned an empty question");
    return q;
  }

  AnswerLabel interpret_answer(const QuestionRecord& question, const std::string& answer_text,
                               const std::string& responding_user, const std::vector<std::string>& users) override {
    const auto value = with_retry(
        render_interpretation_prompt(question.question_text, answer_text, users, responding_user),
        [](const std::string& c) { return parse::answer_output(c); });
    if (text::lower(value) == "shared") return AnswerLabel::shared();
    for (const auto& u : users)
      if (text::lower(u) == text::lower(value)) return AnswerLabel::owner(u);
    throw InterpretationError("model answered with '" + value + "', which is not a user", answer_text);
  }

  std::vector<AnswerLabel> predict_owners(const std::vector<ObjectRow>& rows,
                                          const std::vector<std::string>& users) override {
    if (rows.empty()) return {};
    const auto names = with_retry(render_owner_prediction_prompt(rows, users),
                                  [n = rows.size()](const std::string& c) -> std::optional<std::vector<std::string>> {
                                    auto items = parse::bracket_list(c, "owner_output");
                                    if (!items || items->size() != n) return std::nullopt;
                                    return items;
                                  });
    std::vector<AnswerLabel> out;
    for (const auto& name : names) {
      AnswerLabel label = AnswerLabel::shared();
      for (const auto& u : users)
        if (text::lower(u) == text::lower(name)) label = AnswerLabel::owner(u);
      out.push_back(label);
    }
    return out;
  }

 private:
  LlmConfig config_;
  Endpoint endpoint_;
};

}  // namespace actowl::dialogue
