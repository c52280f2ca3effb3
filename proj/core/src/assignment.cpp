#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "sib/error.h"
#include "sib/geometry.h"

namespace sib::geom {
namespace {

using Matrix = std::vector<std::vector<double>>;

struct HungarianResult {
  std::vector<int> row_to_col;
  std::vector<double> row_potential;
  std::vector<double> col_potential;
};

// Shortest augmenting path Hungarian method, O(n^3). Potentials satisfy
// cost[i][j] - u[i] - v[j] >= 0 with equality on matched edges.
HungarianResult hungarian(const Matrix& cost) {
  const std::size_t n = cost.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> owner(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t row = 1; row <= n; ++row) {
    owner[0] = row;
    std::size_t col0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t i0 = owner[col0];
      double delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  HungarianResult out;
  out.row_to_col.assign(n, -1);
  for (std::size_t j = 1; j <= n; ++j) out.row_to_col[owner[j] - 1] = static_cast<int>(j - 1);
  out.row_potential.assign(u.begin() + 1, u.end());
  out.col_potential.assign(v.begin() + 1, v.end());
  return out;
}

// Every optimal matching uses only edges that are tight under an optimal dual,
// so the lexicographically smallest optimum is the lexicographically smallest
// perfect matching of the tight subgraph.
class TightMatcher {
 public:
  TightMatcher(std::vector<std::vector<int>> adjacency, std::vector<int> row_to_col)
      : adj_(std::move(adjacency)), row_to_col_(std::move(row_to_col)) {
    const std::size_t n = adj_.size();
    col_to_row_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i) col_to_row_[static_cast<std::size_t>(row_to_col_[i])] = static_cast<int>(i);
    fixed_.assign(n, 0);
  }

  std::vector<int> solve() {
    const std::size_t n = adj_.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (int col : adj_[i]) {
        if (col == row_to_col_[i]) break;
        const int displaced = col_to_row_[static_cast<std::size_t>(col)];
        if (fixed_[static_cast<std::size_t>(displaced)]) continue;
        if (try_take(static_cast<int>(i), col)) break;
      }
      fixed_[i] = 1;
    }
    return row_to_col_;
  }

 private:
  bool try_take(int row, int col) {
    const auto r = static_cast<std::size_t>(row);
    const int old_col = row_to_col_[r];
    const int displaced = col_to_row_[static_cast<std::size_t>(col)];

    row_to_col_[r] = col;
    col_to_row_[static_cast<std::size_t>(col)] = row;
    col_to_row_[static_cast<std::size_t>(old_col)] = -1;
    row_to_col_[static_cast<std::size_t>(displaced)] = -1;

    fixed_[r] = 1;
    visited_.assign(adj_.size(), 0);
    const bool ok = augment(displaced);
    fixed_[r] = 0;
    if (ok) return true;

    row_to_col_[r] = old_col;
    col_to_row_[static_cast<std::size_t>(old_col)] = row;
    col_to_row_[static_cast<std::size_t>(col)] = displaced;
    row_to_col_[static_cast<std::size_t>(displaced)] = col;
    return false;
  }

  bool augment(int row) {
    for (int col : adj_[static_cast<std::size_t>(row)]) {
      const auto c = static_cast<std::size_t>(col);
      if (visited_[c]) continue;
      visited_[c] = 1;
      const int holder = col_to_row_[c];
      if (holder >= 0 && fixed_[static_cast<std::size_t>(holder)]) continue;
      if (holder < 0 || augment(holder)) {
        row_to_col_[static_cast<std::size_t>(row)] = col;
        col_to_row_[c] = row;
        return true;
      }
    }
    return false;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<int> row_to_col_;
  std::vector<int> col_to_row_;
  std::vector<char> fixed_;
  std::vector<char> visited_;
};

}  // namespace

Assignment assign(std::span<const Vec3> current, const Formation& target) {
  const std::size_t n = current.size();
  if (n != target.size()) {
    throw Error(Errc::SizeMismatch, "assign: " + std::to_string(n) + " drones for " +
                                        std::to_string(target.size()) + " slots");
  }
  if (n > kMaxAssignmentSize) {
    throw Error(Errc::SizeMismatch, "assign: at most " + std::to_string(kMaxAssignmentSize) + " drones");
  }
  Assignment out;
  if (n == 0) return out;

  Matrix cost(n, std::vector<double>(n));
  double max_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cost[i][j] = (current[i] - target.slots[j].position).norm_sq();
      max_cost = std::max(max_cost, cost[i][j]);
    }
  }

  const HungarianResult h = hungarian(cost);
  const double eps = 1e-11 * std::max(1.0, max_cost);
  std::vector<std::vector<int>> tight(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double reduced = cost[i][j] - h.row_potential[i] - h.col_potential[j];
      if (reduced <= eps || static_cast<int>(j) == h.row_to_col[i]) tight[i].push_back(static_cast<int>(j));
    }
  }

  const std::vector<int> matching = TightMatcher(std::move(tight), h.row_to_col).solve();
  out.slot_of.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.slot_of[i] = static_cast<std::size_t>(matching[i]);
    out.total_cost += cost[i][out.slot_of[i]];
  }
  return out;
}

}  // namespace sib::geom
