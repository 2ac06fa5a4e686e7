#include "sktflow/combinatorics.hpp"

#include <numeric>
#include <stdexcept>

namespace sktflow {

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
  }
  return r;
}

TupleTable::TupleTable(int m, int k) : m_(m), k_(k) {
  if (k < 0 || k > m) throw std::invalid_argument("TupleTable: need 0 <= k <= m");
  size_ = static_cast<int>(binomial(m, k));
  if (k == 0) return;
  flat_.reserve(static_cast<std::size_t>(size_) * k);
  std::vector<int> t(static_cast<std::size_t>(k));
  std::iota(t.begin(), t.end(), 0);
  // colex order: advance the smallest movable position, reset the ones below
  while (true) {
    flat_.insert(flat_.end(), t.begin(), t.end());
    int j = 0;
    while (j < k) {
      const int upper = (j + 1 < k) ? t[static_cast<std::size_t>(j + 1)] : m;
      if (t[static_cast<std::size_t>(j)] + 1 < upper) break;
      ++j;
    }
    if (j == k) break;
    ++t[static_cast<std::size_t>(j)];
    for (int i = 0; i < j; ++i) t[static_cast<std::size_t>(i)] = i;
  }
}

int TupleTable::rank(std::span<const int> t) {
  std::int64_t r = 0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    r += binomial(t[j], static_cast<int>(j) + 1);
  }
  return static_cast<int>(r);
}

int sort_sign(std::span<int> idx) {
  int sign = 1;
  const int n = static_cast<int>(idx.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j + 1 < n - i; ++j) {
      if (idx[j] > idx[j + 1]) {
        std::swap(idx[j], idx[j + 1]);
        sign = -sign;
      }
    }
  }
  for (int i = 0; i + 1 < n; ++i) {
    if (idx[i] == idx[i + 1]) return 0;
  }
  return sign;
}

}  // namespace sktflow
