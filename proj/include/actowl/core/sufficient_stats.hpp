#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "actowl/core/errors.hpp"
#include "actowl/core/types.hpp"

namespace actowl {

/// Joint latent assignment of one object: ownership concept C_n and position component i_n.
struct Assignment {
  std::size_t owner_concept = 0;
  std::size_t component = 0;
  bool operator==(const Assignment&) const = default;
};

/// Raw first and second moments of the positions assigned to one component.
struct PositionStats {
  double count = 0.0;
  Vec2 sum = Vec2::Zero();
  Mat2 sum_outer = Mat2::Zero();  ///< sum of x x^T
};

/// Collapsed representation of the model parameters: every count the
/// posterior predictives need. add() and remove() are exact inverses on the
/// integer counts; position moments agree to rounding.
class SufficientStats {
 public:
  SufficientStats() = default;
  SufficientStats(std::size_t concepts, std::size_t components, std::size_t attribute_dim, std::size_t answer_vocab)
      : L_(concepts),
        K_(components),
        D_(attribute_dim),
        V_(answer_vocab),
        concept_counts_(concepts, 0),
        concept_component_counts_(concepts * components, 0),
        attribute_counts_(concepts * attribute_dim, 0),
        attribute_totals_(concepts, 0),
        answer_counts_(concepts * answer_vocab, 0),
        answer_totals_(concepts, 0),
        positions_(components) {}

  std::size_t concepts() const { return L_; }
  std::size_t components() const { return K_; }
  std::size_t attribute_dim() const { return D_; }
  std::size_t answer_vocab() const { return V_; }

  long concept_count(std::size_t l) const { return concept_counts_.at(l); }
  long concept_component_count(std::size_t l, std::size_t k) const { return concept_component_counts_.at(l * K_ + k); }
  long attribute_count(std::size_t l, std::size_t d) const { return attribute_counts_.at(l * D_ + d); }
  long attribute_total(std::size_t l) const { return attribute_totals_.at(l); }
  long answer_count(std::size_t l, std::size_t v) const { return answer_counts_.at(l * V_ + v); }
  long answer_total(std::size_t l) const { return answer_totals_.at(l); }
  const PositionStats& position(std::size_t k) const { return positions_.at(k); }

  long assigned() const {
    long n = 0;
    for (long c : concept_counts_) n += c;
    return n;
  }

  void add(const Observation& obs, std::optional<std::size_t> answer, Assignment a) { apply(obs, answer, a, +1); }
  void remove(const Observation& obs, std::optional<std::size_t> answer, Assignment a) { apply(obs, answer, a, -1); }

  /// Exact equality on every integer count, tolerance on the position moments.
  bool equivalent(const SufficientStats& other, double tol) const {
    if (L_ != other.L_ || K_ != other.K_ || D_ != other.D_ || V_ != other.V_) return false;
    if (concept_counts_ != other.concept_counts_ || concept_component_counts_ != other.concept_component_counts_ ||
        attribute_counts_ != other.attribute_counts_ || answer_counts_ != other.answer_counts_)
      return false;
    for (std::size_t k = 0; k < K_; ++k) {
      const auto& a = positions_[k];
      const auto& b = other.positions_[k];
      if (a.count != b.count) return false;
      if ((a.sum - b.sum).cwiseAbs().maxCoeff() > tol) return false;
      if ((a.sum_outer - b.sum_outer).cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
  }

 private:
  void apply(const Observation& obs, std::optional<std::size_t> answer, Assignment a, long sign) {
    if (a.owner_concept >= L_ || a.component >= K_) throw InputError("assignment index out of range");
    if (obs.attributes.dim() != D_) throw InputError("attribute vector has the wrong dimension");
    if (answer && *answer >= V_) throw InputError("answer index out of range");
    if (!obs.position.allFinite()) throw InputError("position must be finite");
    for (int v : obs.attributes.values)
      if (v < 0) throw InputError("attribute counts must be non-negative");

    auto bump = [sign](long& slot) {
      slot += sign;
      if (slot < 0) throw InputError("removing an observation that was never added");
    };
    bump(concept_counts_[a.owner_concept]);
    bump(concept_component_counts_[a.owner_concept * K_ + a.component]);
    for (std::size_t d = 0; d < D_; ++d) {
      attribute_counts_[a.owner_concept * D_ + d] += sign * obs.attributes.values[d];
      if (attribute_counts_[a.owner_concept * D_ + d] < 0) throw InputError("removing an observation that was never added");
    }
    attribute_totals_[a.owner_concept] += sign * obs.attributes.total();
    if (answer) {
      bump(answer_counts_[a.owner_concept * V_ + *answer]);
      answer_totals_[a.owner_concept] += sign;
    }
    auto& p = positions_[a.component];
    const double s = static_cast<double>(sign);
    p.count += s;
    p.sum += s * obs.position;
    p.sum_outer += s * (obs.position * obs.position.transpose());
    if (p.count == 0.0) {
      // Reset accumulated rounding once a component empties out.
      p.sum.setZero();
      p.sum_outer.setZero();
    }
  }

  std::size_t L_ = 0, K_ = 0, D_ = 0, V_ = 0;
  std::vector<long> concept_counts_;
  std::vector<long> concept_component_counts_;
  std::vector<long> attribute_counts_;
  std::vector<long> attribute_totals_;
  std::vector<long> answer_counts_;
  std::vector<long> answer_totals_;
  std::vector<PositionStats> positions_;
};

}  // namespace actowl
