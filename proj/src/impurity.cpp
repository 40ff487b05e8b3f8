#include <fmt/format.h>

#include <stdexcept>

#include "lrf/tree.hpp"

namespace lrf {

double node_impurity(ClassCounts c) {
  if (c.empty()) return 0.0;
  return 2.0 * static_cast<double>(c.n_pos) * static_cast<double>(c.n_neg) /
         static_cast<double>(c.total());
}

double gini(ClassCounts c) {
  if (c.n_pos < 0 || c.n_neg < 0 || c.empty()) {
    throw std::invalid_argument(fmt::format("gini of an empty node ({}, {})", c.n_pos, c.n_neg));
  }
  const double p = c.p_pos();
  return 2.0 * p * (1.0 - p);
}

double weighted_gini(ClassCounts left, ClassCounts right) {
  const auto n1 = static_cast<double>(left.total());
  const auto n2 = static_cast<double>(right.total());
  return (n1 * gini(left) + n2 * gini(right)) / (n1 + n2);
}

double cumulative_gini(const std::array<ClassCounts, 4>& leaves) {
  double total = 0.0;
  for (const auto& leaf : leaves) total += static_cast<double>(leaf.total()) * gini(leaf);
  return total;
}

}  // namespace lrf
