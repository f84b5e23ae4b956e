#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "actowl/core/errors.hpp"

namespace actowl {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Model hyperparameters. Defaults are the household-experiment settings.
struct Hyperparameters {
  double alpha = 1.0;    ///< Dirichlet concentration of per-concept attribute distributions
  double beta = 0.01;    ///< Dirichlet concentration of per-concept answer distributions
  double gamma = 5.0;    ///< Dirichlet concentration of the concept mixing weights
  double lambda = 1.0;   ///< concentration of per-concept position-component weights (split as lambda/K)
  Vec2 m0 = Vec2::Zero();
  double kappa0 = 1.0;
  Mat2 V0 = (Mat2() << 0.1, 0.0, 0.0, 0.1).finished();
  double nu0 = 5.0;
  std::size_t L = 4;  ///< ownership concepts
  std::size_t K = 4;  ///< position components
  double w_answer = 1.0;
  double w_attribute = 1.0;
  double w_position = 1.0;

  static constexpr int kPositionDim = 2;

  /// Throws InputError describing the first violated constraint.
  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string(name) + " must be positive and finite");
    };
    positive(alpha, "alpha");
    positive(beta, "beta");
    positive(gamma, "gamma");
    positive(lambda, "lambda");
    positive(kappa0, "kappa0");
    if (!(nu0 > kPositionDim + 1)) throw InputError("nu0 must exceed dim + 1 = 3");
    if (!m0.allFinite()) throw InputError("m0 must be finite");
    if (!V0.allFinite() || (V0 - V0.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw InputError("V0 must be symmetric");
    if (!(V0(0, 0) > 0.0) || !(V0.determinant() > 0.0)) throw InputError("V0 must be positive definite");
    if (L == 0 || K == 0) throw InputError("L and K must be at least 1");
    for (double w : {w_answer, w_attribute, w_position})
      if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("modality weights must be finite and non-negative");
  }
};

/// Attribute blocks shared by every scenario: [class one-hot | color | size | shape].
namespace attributes {
inline constexpr std::array<std::string_view, 6> kColors = {"red", "blue", "yellow", "green", "black", "white"};
inline constexpr std::array<std::string_view, 3> kSizes = {"large", "medium", "small"};
inline constexpr std::array<std::string_view, 3> kShapes = {"round", "square", "triangle"};
inline constexpr std::size_t kNonClassDims = kColors.size() + kSizes.size() + kShapes.size();

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

template <std::size_t N>
std::optional<std::size_t> find(const std::array<std::string_view, N>& table, std::string_view value) {
  const std::string v = lower(value);
  for (std::size_t i = 0; i < N; ++i)
    if (table[i] == v) return i;
  return std::nullopt;
}

inline std::optional<std::size_t> color_index(std::string_view c) { return find(kColors, c); }
inline std::optional<std::size_t> size_index(std::string_view s) { return find(kSizes, s); }
inline std::optional<std::size_t> shape_index(std::string_view s) {
  if (lower(s) == "circle") return 0;
  return find(kShapes, s);
}
}  // namespace attributes

/// Multi-hot count vector o_n. Arbitrary non-negative counts are valid input
/// to the likelihood; negative entries are rejected where they are consumed.
struct AttributeVector {
  std::vector<int> values;

  AttributeVector() = default;
  explicit AttributeVector(std::vector<int> v) : values(std::move(v)) {}

  std::size_t dim() const { return values.size(); }
  int total() const {
    int t = 0;
    for (int v : values) t += v;
    return t;
  }

  /// Builds [class one-hot | color | size | shape] from names. Throws InputError
  /// on any unknown name.
  static AttributeVector encode(std::size_t n_classes, std::size_t class_index, std::string_view color,
                                std::string_view size, std::string_view shape) {
    if (class_index >= n_classes) throw InputError("class index out of range");
    auto c = attributes::color_index(color);
    auto s = attributes::size_index(size);
    auto h = attributes::shape_index(shape);
    if (!c) throw InputError("unknown color '" + std::string(color) + "'");
    if (!s) throw InputError("unknown size '" + std::string(size) + "'");
    if (!h) throw InputError("unknown shape '" + std::string(shape) + "'");
    AttributeVector o(std::vector<int>(n_classes + attributes::kNonClassDims, 0));
    o.values[class_index] = 1;
    o.values[n_classes + *c] = 1;
    o.values[n_classes + attributes::kColors.size() + *s] = 1;
    o.values[n_classes + attributes::kColors.size() + attributes::kSizes.size() + *h] = 1;
    return o;
  }

  /// The 6-dimensional color block of an encoded vector.
  AttributeVector color_block(std::size_t n_classes) const {
    if (values.size() != n_classes + attributes::kNonClassDims) throw InputError("vector layout mismatch");
    auto first = values.begin() + static_cast<std::ptrdiff_t>(n_classes);
    return AttributeVector(std::vector<int>(first, first + static_cast<std::ptrdiff_t>(attributes::kColors.size())));
  }

  bool operator==(const AttributeVector&) const = default;
};

/// A user answer w_n. Unknown is missing data, not a vocabulary element.
class AnswerLabel {
 public:
  enum class Kind { Unknown, Shared, Owner };

  AnswerLabel() = default;
  static AnswerLabel unknown() { return {}; }
  static AnswerLabel shared() { return AnswerLabel(Kind::Shared, {}); }
  static AnswerLabel owner(std::string name) { return AnswerLabel(Kind::Owner, std::move(name)); }

  Kind kind() const { return kind_; }
  bool is_unknown() const { return kind_ == Kind::Unknown; }
  bool is_shared() const { return kind_ == Kind::Shared; }
  bool is_owner() const { return kind_ == Kind::Owner; }
  const std::string& name() const { return name_; }

  /// "unknown", "Shared" or the owner's name, as used in prompts and CSVs.
  std::string to_string() const {
    switch (kind_) {
      case Kind::Unknown: return "unknown";
      case Kind::Shared: return "Shared";
      case Kind::Owner: return name_;
    }
    return "unknown";
  }

  bool operator==(const AnswerLabel&) const = default;

 private:
  AnswerLabel(Kind k, std::string n) : kind_(k), name_(std::move(n)) {}
  Kind kind_ = Kind::Unknown;
  std::string name_;
};

/// Closed answer vocabulary: one entry per user followed by "Shared".
class AnswerVocabulary {
 public:
  AnswerVocabulary() = default;
  explicit AnswerVocabulary(std::vector<std::string> users) : users_(std::move(users)) {
    for (std::size_t i = 0; i < users_.size(); ++i)
      for (std::size_t j = i + 1; j < users_.size(); ++j)
        if (users_[i] == users_[j]) throw InputError("duplicate user '" + users_[i] + "'");
  }

  std::size_t size() const { return users_.size() + 1; }
  std::size_t shared_index() const { return users_.size(); }
  const std::vector<std::string>& users() const { return users_; }

  bool contains_user(std::string_view name) const {
    return std::find(users_.begin(), users_.end(), name) != users_.end();
  }

  /// nullopt for Unknown; throws VocabularyError for an owner outside the user list.
  std::optional<std::size_t> index_of(const AnswerLabel& label) const {
    switch (label.kind()) {
      case AnswerLabel::Kind::Unknown: return std::nullopt;
      case AnswerLabel::Kind::Shared: return shared_index();
      case AnswerLabel::Kind::Owner: {
        auto it = std::find(users_.begin(), users_.end(), label.name());
        if (it == users_.end()) throw VocabularyError("answer names unknown user '" + label.name() + "'");
        return static_cast<std::size_t>(it - users_.begin());
      }
    }
    return std::nullopt;
  }

  AnswerLabel label_at(std::size_t index) const {
    if (index < users_.size()) return AnswerLabel::owner(users_[index]);
    if (index == users_.size()) return AnswerLabel::shared();
    throw InputError("answer index out of range");
  }

 private:
  std::vector<std::string> users_;
};

/// Evidence for one object: position x_n, attributes o_n, answer w_n.
struct Observation {
  std::size_t object_id = 0;
  Vec2 position = Vec2::Zero();
  AttributeVector attributes;
  AnswerLabel answer;
  std::optional<std::size_t> fixed_position_component;  ///< clamped i_n, when set
};

/// Object id -> answer. Absent ids keep whatever answer the observation carries.
using AnswerOverlay = std::map<std::size_t, AnswerLabel>;

}  // namespace actowl
