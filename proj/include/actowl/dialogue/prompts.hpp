#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actowl/dialogue/backend.hpp"
#include "actowl/dialogue/prompt_templates.hpp"
#include "actowl/dialogue/text.hpp"

namespace actowl::dialogue {

using Substitutions = std::vector<std::pair<std::string_view, std::string>>;

/// Single left-to-right pass; substituted text is never rescanned, and at each
/// position the longest matching marker wins (OTHER_OBJECT_LIST over OBJECT_LIST).
inline std::string render_template(std::string_view tmpl, const Substitutions& subs) {
  while (!tmpl.empty() && tmpl.back() == '\n') tmpl.remove_suffix(1);
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const std::pair<std::string_view, std::string>* hit = nullptr;
    for (const auto& s : subs)
      if (tmpl.substr(i, s.first.size()) == s.first && (!hit || s.first.size() > hit->first.size())) hit = &s;
    if (hit) {
      out += hit->second;
      i += hit->first.size();
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

inline std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

/// ["anna", "ben"]
inline std::string format_user_list(const std::vector<std::string>& users) {
  std::vector<std::string> quoted;
  for (const auto& u : users) quoted.push_back("\"" + u + "\"");
  return "[" + join(quoted, ", ") + "]";
}

inline std::string render_classification_prompt(const std::vector<std::string>& classes, EnvironmentContext ctx) {
  const auto tmpl =
      ctx == EnvironmentContext::Laboratory ? templates::classify_laboratory : templates::classify_household;
  return render_template(tmpl, {{"OBJECT_LIST", join(classes, ", ")}});
}

inline std::string render_question_prompt(const ObjectRow& target, const std::vector<ObjectRow>& others) {
  return render_template(templates::question,
                         {{"OTHER_OBJECT_LIST", format_rows(others)}, {"TARGET_OBJECT_LIST", format_row(target)}});
}

inline std::string render_interpretation_prompt(const std::string& question, const std::string& answer,
                                                const std::vector<std::string>& users, const std::string& responder) {
  return render_template(templates::interpret, {{"QUESTION_TEXT", question},
                                                {"USER_ANSWER", answer},
                                                {"USER_LIST", format_user_list(users)},
                                                {"RESPONDING_USER", responder}});
}

inline std::string render_owner_prediction_prompt(const std::vector<ObjectRow>& rows,
                                                  const std::vector<std::string>& users) {
  return render_template(templates::predict_owners,
                         {{"OTHER_OBJECT_LIST", format_rows(rows)}, {"USER_LIST", format_user_list(users)}});
}

namespace parse {

/// Items of the bracketed list following `key =`, e.g. `Owned_object = [book, pen]`.
/// nullopt when the key or the brackets are missing.
inline std::optional<std::vector<std::string>> bracket_list(std::string_view completion, std::string_view key) {
  const std::string lowered = text::lower(text::ascii_quotes(completion));
  const std::string key_l = text::lower(key);
  auto k = lowered.rfind(key_l);
  if (k == std::string::npos) return std::nullopt;
  auto eq = lowered.find('=', k + key_l.size());
  if (eq == std::string::npos) return std::nullopt;
  auto open = lowered.find('[', eq);
  if (open == std::string::npos) return std::nullopt;
  auto close = lowered.find(']', open);
  if (close == std::string::npos) return std::nullopt;
  const std::string body = text::ascii_quotes(completion).substr(open + 1, close - open - 1);
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= body.size()) {
    auto comma = body.find(',', start);
    if (comma == std::string::npos) comma = body.size();
    std::string item = text::strip_quotes(std::string_view(body).substr(start, comma - start));
    if (!item.empty()) items.push_back(item);
    start = comma + 1;
  }
  return items;
}

/// Value of `answer_output = "..."`, quotes stripped.
inline std::optional<std::string> answer_output(std::string_view completion) {
  const std::string plain = text::ascii_quotes(completion);
  const std::string lowered = text::lower(plain);
  auto k = lowered.rfind("answer_output");
  if (k == std::string::npos) return std::nullopt;
  auto eq = lowered.find('=', k);
  if (eq == std::string::npos) return std::nullopt;
  auto eol = plain.find('\n', eq);
  std::string value = text::strip_quotes(std::string_view(plain).substr(eq + 1, eol == std::string::npos ? eol : eol - eq - 1));
  if (value.empty()) return std::nullopt;
  return value;
}

}  // namespace parse

}  // namespace actowl::dialogue
