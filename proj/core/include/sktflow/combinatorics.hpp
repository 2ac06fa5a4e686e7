#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sktflow {

std::int64_t binomial(int n, int k);

/// Strictly increasing k-subsets of {0..m-1}, colexicographically ranked.
class TupleTable {
public:
  TupleTable(int m, int k);

  int m() const { return m_; }
  int k() const { return k_; }
  int size() const { return size_; }

  std::span<const int> tuple(int rank) const {
    return {flat_.data() + static_cast<std::size_t>(rank) * k_, static_cast<std::size_t>(k_)};
  }

  /// Rank of a strictly increasing tuple: sum_j binomial(t[j], j+1).
  static int rank(std::span<const int> t);

private:
  int m_, k_;
  int size_ = 0;
  std::vector<int> flat_;
};

/// Sorts idx in place; returns the permutation sign, or 0 on a repeated index.
int sort_sign(std::span<int> idx);

}  // namespace sktflow
