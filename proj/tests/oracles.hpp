#pragma once

// Reference computations written directly from the definitions, over plain
// rationals and index vectors. They share no code with the library beyond the
// GMP rational type.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace oracle {

using Q = mpq_class;
using Vec = std::vector<Q>;
using Cells = std::vector<std::vector<std::size_t>>;

inline Q qabs(const Q& q) { return q < 0 ? Q(-q) : q; }

inline Q power(const Q& base, unsigned n) {
  Q r = 1;
  for (unsigned i = 0; i < n; ++i) r *= base;
  return r;
}

/// Atoms of the algebra generated by `sets` (membership bitmasks): points
/// with the same membership signature share a cell. Cells ordered by their
/// smallest point.
inline Cells atoms(std::size_t n, const std::vector<std::uint64_t>& sets) {
  Cells cells;
  std::vector<std::vector<bool>> keys;
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<bool> key;
    for (auto s : sets) key.push_back((s >> x) & 1u);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      cells.push_back({x});
    } else {
      cells[static_cast<std::size_t>(it - keys.begin())].push_back(x);
    }
  }
  return cells;
}

/// The weighted average of f on each positive-mass cell, zero elsewhere.
inline Vec cond_exp(const Vec& w, const Cells& cells, const Vec& f) {
  Vec out(w.size(), Q(0));
  for (const auto& cell : cells) {
    Q mass = 0, sum = 0;
    for (auto x : cell) {
      mass += w[x];
      sum += w[x] * f[x];
    }
    if (mass == 0) continue;
    for (auto x : cell) out[x] = sum / mass;
  }
  return out;
}

inline Q l1(const Vec& w, const Vec& f) {
  Q s = 0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * qabs(f[i]);
  return s;
}

/// Fiber sums over preimages divided by the target mass, zero on null targets.
inline Vec pr(const std::vector<std::size_t>& assign, const Vec& wy, const Vec& wx, const Vec& f) {
  Vec num(wx.size(), Q(0));
  for (std::size_t y = 0; y < assign.size(); ++y) num[assign[y]] += f[y] * wy[y];
  for (std::size_t x = 0; x < wx.size(); ++x) num[x] = wx[x] == 0 ? Q(0) : Q(num[x] / wx[x]);
  return num;
}

inline Q norm_l1(const Vec& v) {
  Q s = 0;
  for (const auto& c : v) s += qabs(c);
  return s;
}

inline Q norm_linf(const Vec& v) {
  Q s = 0;
  for (const auto& c : v) s = std::max(s, qabs(c));
  return s;
}

inline Q norm_l2_squared(const Vec& v) {
  Q s = 0;
  for (const auto& c : v) s += c * c;
  return s;
}

/// max_j |<g_j, v>|.
inline Q norm_poly(const std::vector<Vec>& g, const Vec& v) {
  Q best = 0;
  for (const auto& row : g) {
    Q s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += row[i] * v[i];
    best = std::max(best, qabs(s));
  }
  return best;
}

/// Solves the square system a x = b by Gauss-Jordan elimination.
inline std::optional<Vec> solve_square(std::vector<Vec> a, Vec b) {
  std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t r = c;
    while (r < n && a[r][c] == 0) ++r;
    if (r == n) return std::nullopt;
    std::swap(a[r], a[c]);
    std::swap(b[r], b[c]);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == c || a[k][c] == 0) continue;
      Q factor = a[k][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[k][j] -= factor * a[c][j];
      b[k] -= factor * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

/// Dual norm of w for the polyhedral norm max_j |<g_j, .>|: the least
/// sum |lambda_j| with sum lambda_j g_j = w. The minimum of this linear
/// program sits at a basic solution, so every choice of dim independent
/// functionals is tried.
inline Q dual_norm_poly(const std::vector<Vec>& g, const Vec& w) {
  std::size_t d = w.size();
  std::size_t m = g.size();
  std::optional<Q> best;
  std::vector<std::size_t> pick(d);
  auto visit = [&](auto&& self, std::size_t start, std::size_t depth) -> void {
    if (depth == d) {
      std::vector<Vec> a(d, Vec(d));
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) a[r][c] = g[pick[c]][r];
      if (auto lambda = solve_square(a, w)) {
        Q s = norm_l1(*lambda);
        if (!best || s < *best) best = s;
      }
      return;
    }
    for (std::size_t j = start; j < m; ++j) {
      pick[depth] = j;
      self(self, j + 1, depth + 1);
    }
  };
  visit(visit, 0, 0);
  return best.value_or(Q(0));
}

/// Nearest double of a rational.
inline double to_double(const Q& q) { return q.get_d(); }

}  // namespace oracle
