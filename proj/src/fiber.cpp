#include "nmforge/fiber.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "nmforge/error.hpp"

namespace nmforge {

namespace {

void check_dim(const Vector& v, std::size_t dim) {
  if (v.size() != dim)
    throw Error(Errc::DimensionMismatch,
                "vector of length " + std::to_string(v.size()) + " in a fiber of dimension " + std::to_string(dim));
}

bool lex_less(const RationalVector& a, const RationalVector& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

Real dot(const RationalVector& g, const Vector& v) {
  Real acc;
  for (std::size_t i = 0; i < g.size(); ++i) acc += Real(g[i]) * v[i];
  return acc;
}

// Enumerates the vertices of {v : |<g_j, v>| <= 1 for all j}. Each vertex is
// the solution of d active constraints G_S v = s for a sign pattern s.
std::vector<RationalVector> polyhedral_vertices(const std::vector<RationalVector>& g, std::size_t dim) {
  std::size_t m = g.size();
  std::vector<RationalVector> out;
  std::vector<bool> choose(m, false);
  std::fill(choose.begin(), choose.begin() + static_cast<std::ptrdiff_t>(dim), true);
  do {
    std::vector<RationalVector> rows;
    for (std::size_t j = 0; j < m; ++j)
      if (choose[j]) rows.push_back(g[j]);
    auto inv = inverse(RationalMatrix::from_rows(rows));
    if (!inv) continue;
    for (std::size_t pattern = 0; pattern < (std::size_t{1} << dim); ++pattern) {
      RationalVector s(dim);
      for (std::size_t i = 0; i < dim; ++i) s[i] = ((pattern >> i) & 1u) ? -1 : 1;
      RationalVector v = inv->apply(s);
      bool feasible = std::all_of(g.begin(), g.end(), [&](const RationalVector& row) {
        Rational acc = 0;
        for (std::size_t i = 0; i < dim; ++i) acc += row[i] * v[i];
        return abs(acc) <= 1;
      });
      if (feasible) out.push_back(std::move(v));
    }
  } while (std::prev_permutation(choose.begin(), choose.end()));
  std::sort(out.begin(), out.end(), lex_less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<RationalVector> lp_vertices(LpIndex index, const RationalVector& w) {
  std::size_t dim = w.size();
  std::vector<RationalVector> out;
  if (index == LpIndex::One) {
    for (std::size_t i = 0; i < dim; ++i) {
      for (int s : {1, -1}) {
        RationalVector v(dim);
        v[i] = Rational(s) / w[i];
        out.push_back(std::move(v));
      }
    }
  } else if (index == LpIndex::Inf) {
    for (std::size_t pattern = 0; pattern < (std::size_t{1} << dim); ++pattern) {
      RationalVector v(dim);
      for (std::size_t i = 0; i < dim; ++i) v[i] = Rational(((pattern >> i) & 1u) ? -1 : 1) / w[i];
      out.push_back(std::move(v));
    }
  }
  return out;
}

// One functional from each +/- pair.
std::vector<RationalVector> half_of_symmetric(const std::vector<RationalVector>& vs) {
  std::vector<RationalVector> out;
  for (const auto& v : vs) {
    auto nz = std::find_if(v.begin(), v.end(), [](const Rational& x) { return sgn(x) != 0; });
    if (nz != v.end() && sgn(*nz) > 0) out.push_back(v);
  }
  return out;
}

}  // namespace

FiberSpace FiberSpace::lp(std::size_t dim, LpIndex p) {
  if (dim == 0) throw Error(Errc::NotANorm, "fiber of dimension 0");
  return weighted_lp(p, RationalVector(dim, Rational(1)));
}

FiberSpace FiberSpace::weighted_lp(LpIndex p, RationalVector weights) {
  if (weights.empty()) throw Error(Errc::NotANorm, "fiber of dimension 0");
  if (weights.size() > kMaxLpDim)
    throw Error(Errc::DimensionMismatch, "lp fibers are limited to dimension " + std::to_string(kMaxLpDim));
  for (auto& w : weights) {
    w.canonicalize();
    if (sgn(w) <= 0) throw Error(Errc::NotANorm, "nonpositive weight " + to_string(w));
  }
  FiberSpace f;
  f.family_ = Family::Lp;
  f.index_ = p;
  f.dim_ = weights.size();
  f.weights_ = std::move(weights);
  f.vertices_ = std::make_shared<VertexCache>();
  return f;
}

FiberSpace FiberSpace::polyhedral(std::vector<RationalVector> functionals) {
  if (functionals.empty()) throw Error(Errc::NotANorm, "polyhedral norm without functionals");
  std::size_t dim = functionals.front().size();
  if (dim == 0) throw Error(Errc::NotANorm, "fiber of dimension 0");
  if (dim > kMaxPolyhedralDim)
    throw Error(Errc::DimensionMismatch, "polyhedral fibers are limited to dimension " + std::to_string(kMaxPolyhedralDim));
  auto g = RationalMatrix::from_rows(functionals);
  if (rank(g) != dim) throw Error(Errc::NotANorm, "functionals do not span the dual");
  FiberSpace f;
  f.family_ = Family::Polyhedral;
  f.dim_ = dim;
  f.functionals_ = std::move(functionals);
  f.vertices_ = std::make_shared<VertexCache>();
  return f;
}

bool FiberSpace::unit_weights() const {
  return std::all_of(weights_.begin(), weights_.end(), [](const Rational& w) { return w == 1; });
}

Real FiberSpace::norm(const Vector& v) const {
  check_dim(v, dim_);
  if (family_ == Family::Polyhedral) {
    Real best;
    for (const auto& g : functionals_) best = max(best, abs(dot(g, v)));
    return best;
  }
  switch (index_) {
    case LpIndex::One: {
      Real acc;
      for (std::size_t i = 0; i < dim_; ++i) acc += Real(weights_[i]) * abs(v[i]);
      return acc;
    }
    case LpIndex::Two: {
      Real acc;
      for (std::size_t i = 0; i < dim_; ++i) acc += Real(weights_[i]) * v[i] * v[i];
      return sqrt(acc);
    }
    case LpIndex::Inf: {
      Real best;
      for (std::size_t i = 0; i < dim_; ++i) best = max(best, Real(weights_[i]) * abs(v[i]));
      return best;
    }
  }
  return Real();
}

const std::vector<RationalVector>& FiberSpace::ball_vertices() const {
  static const std::vector<RationalVector> none;
  if (!vertices_) return none;
  std::call_once(vertices_->once, [this] {
    vertices_->vertices = family_ == Family::Polyhedral ? polyhedral_vertices(functionals_, dim_)
                                                        : lp_vertices(index_, weights_);
  });
  return vertices_->vertices;
}

std::string FiberSpace::describe() const {
  std::string out;
  if (family_ == Family::Polyhedral) {
    out = "poly(" + std::to_string(functionals_.size()) + " functionals)";
  } else {
    out = index_ == LpIndex::One ? "l1" : index_ == LpIndex::Two ? "l2" : "linf";
    if (!unit_weights()) {
      out += "[w=";
      for (std::size_t i = 0; i < weights_.size(); ++i) out += (i ? "," : "") + to_string(weights_[i]);
      out += "]";
    }
  }
  return out + "^" + std::to_string(dim_);
}

bool operator==(const FiberSpace& a, const FiberSpace& b) {
  return a.family_ == b.family_ && a.dim_ == b.dim_ &&
         (a.family_ == FiberSpace::Family::Polyhedral ? a.functionals_ == b.functionals_
                                                      : a.index_ == b.index_ && a.weights_ == b.weights_);
}

DualFiberSpace dual_fiber(const FiberSpace& fiber) {
  if (fiber.family() == FiberSpace::Family::Polyhedral) {
    return DualFiberSpace(FiberSpace::polyhedral(half_of_symmetric(fiber.ball_vertices())), fiber);
  }
  RationalVector reciprocal;
  for (const auto& w : fiber.weights()) reciprocal.push_back(Rational(1) / w);
  LpIndex conjugate = fiber.index() == LpIndex::One ? LpIndex::Inf
                      : fiber.index() == LpIndex::Inf ? LpIndex::One
                                                      : LpIndex::Two;
  return DualFiberSpace(FiberSpace::weighted_lp(conjugate, std::move(reciprocal)), fiber);
}

Real pair(const Vector& w, const Vector& v) {
  if (w.size() != v.size())
    throw Error(Errc::DimensionMismatch,
                "pairing vectors of length " + std::to_string(w.size()) + " and " + std::to_string(v.size()));
  Real acc;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * v[i];
  return acc;
}

Vector attaining_vector(const FiberSpace& primal, const Vector& w) {
  check_dim(w, primal.dim());
  std::size_t dim = primal.dim();
  const auto& weights = primal.weights();
  if (primal.family() == FiberSpace::Family::Polyhedral) {
    const auto& vertices = primal.ball_vertices();
    std::size_t best = 0;
    Real best_value = dot(vertices[0], w);
    for (std::size_t i = 1; i < vertices.size(); ++i) {
      Real value = dot(vertices[i], w);
      if (best_value < value) {
        best_value = value;
        best = i;
      }
    }
    return to_real(vertices[best]);
  }
  Vector v(dim);
  switch (primal.index()) {
    case LpIndex::One: {
      // Dual norm is max_i |w_i| / weight_i.
      std::size_t best = 0;
      for (std::size_t i = 1; i < dim; ++i)
        if (abs(w[best]) / Real(weights[best]) < abs(w[i]) / Real(weights[i])) best = i;
      v[best] = Real(Rational(w[best].sign() < 0 ? -1 : 1) / weights[best]);
      return v;
    }
    case LpIndex::Inf: {
      for (std::size_t i = 0; i < dim; ++i) v[i] = Real(Rational(w[i].sign() < 0 ? -1 : 1) / weights[i]);
      return v;
    }
    case LpIndex::Two: {
      Real dual_sq;
      for (std::size_t i = 0; i < dim; ++i) dual_sq += w[i] * w[i] / Real(weights[i]);
      if (dual_sq.is_zero()) {
        v[0] = Real(1) / sqrt(Real(weights[0]));
        return v;
      }
      Real dual_norm = sqrt(dual_sq);
      for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / Real(weights[i]) / dual_norm;
      return v;
    }
  }
  return v;
}

Real operator_norm(const std::vector<Vector>& matrix, const FiberSpace& from, const FiberSpace& to) {
  if (matrix.size() != to.dim()) throw Error(Errc::DimensionMismatch, "operator rows differ from target dimension");
  for (const auto& row : matrix) check_dim(row, from.dim());
  auto apply = [&](const Vector& v) {
    Vector out(to.dim());
    for (std::size_t r = 0; r < to.dim(); ++r) out[r] = pair(matrix[r], v);
    return out;
  };
  if (from.polytope_ball()) {
    Real best;
    for (const auto& vertex : from.ball_vertices()) best = max(best, to.norm(apply(to_real(vertex))));
    return best;
  }
  if (to.polytope_ball()) {
    auto target_dual = dual_fiber(to);
    auto source_dual = dual_fiber(from);
    Real best;
    for (const auto& u : target_dual.space().ball_vertices()) {
      Vector adjoint(from.dim());
      for (std::size_t c = 0; c < from.dim(); ++c)
        for (std::size_t r = 0; r < to.dim(); ++r) adjoint[c] += matrix[r][c] * Real(u[r]);
      best = max(best, source_dual.norm(adjoint));
    }
    return best;
  }
  // Weighted l2 to weighted l2. A multiple of the identity between equal
  // fibers has norm |c| exactly.
  if (from == to) {
    bool scalar = true;
    for (std::size_t r = 0; r < to.dim() && scalar; ++r)
      for (std::size_t c = 0; c < from.dim() && scalar; ++c)
        scalar = r == c ? matrix[r][c] == matrix[0][0] : matrix[r][c].is_zero();
    if (scalar) return abs(matrix[0][0]);
  }
  Eigen::MatrixXd b(to.dim(), from.dim());
  for (std::size_t r = 0; r < to.dim(); ++r)
    for (std::size_t c = 0; c < from.dim(); ++c)
      b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          std::sqrt(to.weights()[r].get_d()) * matrix[r][c].to_double() / std::sqrt(from.weights()[c].get_d());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
  return Real::approx(svd.singularValues()(0));
}

Vector add(const Vector& a, const Vector& b) {
  check_dim(b, a.size());
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector scale(const Real& s, const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s * v[i];
  return out;
}

Vector zero_vector(std::size_t dim) { return Vector(dim); }

bool is_zero(const Vector& v) {
  return std::all_of(v.begin(), v.end(), [](const Real& x) { return x.is_zero(); });
}

}  // namespace nmforge
