#pragma once

#include <map>
#include <span>
#include <vector>

#include "actowl/core/errors.hpp"

namespace actowl::harness {

/// Adjusted Rand index from the contingency table. When the expected and
/// maximum index coincide (both partitions trivial) the result is 1.
template <class A, class B>
double adjusted_rand_index(std::span<const A> predicted, std::span<const B> truth) {
  if (predicted.size() != truth.size()) throw InputError("ARI needs labelings of equal length");
  if (predicted.size() < 2) throw InputError("ARI needs at least two items");

  std::map<A, std::size_t> pi;
  std::map<B, std::size_t> ti;
  for (const auto& a : predicted) pi.emplace(a, pi.size());
  for (const auto& b : truth) ti.emplace(b, ti.size());

  std::vector<double> table(pi.size() * ti.size(), 0.0), rows(pi.size(), 0.0), cols(ti.size(), 0.0);
  for (std::size_t n = 0; n < predicted.size(); ++n) {
    const auto r = pi.at(predicted[n]);
    const auto c = ti.at(truth[n]);
    table[r * ti.size() + c] += 1.0;
    rows[r] += 1.0;
    cols[c] += 1.0;
  }
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (double v : table) index += pairs(v);
  for (double v : rows) sum_rows += pairs(v);
  for (double v : cols) sum_cols += pairs(v);
  const double total = pairs(static_cast<double>(predicted.size()));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

template <class A, class B>
double adjusted_rand_index(const std::vector<A>& predicted, const std::vector<B>& truth) {
  return adjusted_rand_index(std::span<const A>(predicted), std::span<const B>(truth));
}

}  // namespace actowl::harness
