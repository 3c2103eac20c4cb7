#ifndef OPFUNC_OPCORE_HPP
#define OPFUNC_OPCORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/QR>

#include "opfunc/core.hpp"
#include "opfunc/jacobi.hpp"

namespace opfunc {

// ---------------------------------------------------------------------------
// Schatten exponent

/// p in [1, inf); the infinite exponent means the operator norm.
class SchattenExponent {
 public:
  explicit SchattenExponent(double p) : p_(p) {
    if (std::isnan(p) || p < 1) throw DomainError("Schatten exponent must satisfy p >= 1");
  }
  static SchattenExponent infinity() {
    return SchattenExponent(std::numeric_limits<double>::infinity());
  }
  /// Accepts a decimal number or "inf" / "INF" / "infinity".
  static SchattenExponent parse(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (s == "inf" || s == "infinity") return infinity();
    std::size_t used = 0;
    double p = 0;
    try {
      p = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ParseError("cannot parse Schatten exponent '" + std::string(text) + "'");
    }
    if (used != s.size()) throw ParseError("cannot parse Schatten exponent '" + std::string(text) + "'");
    return SchattenExponent(p);
  }

  bool is_infinite() const { return std::isinf(p_); }
  double value() const { return p_; }
  std::string to_string() const {
    if (is_infinite()) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", p_);
    return buf;
  }
  friend bool operator==(const SchattenExponent&, const SchattenExponent&) = default;

 private:
  double p_;
};

// ---------------------------------------------------------------------------
// Structured operators

template <typename Real>
Real max_abs(const Matrix<Real>& m) {
  return m.size() == 0 ? Real(0) : m.cwiseAbs().maxCoeff();
}

/// Dense self-adjoint matrix. Construction checks the symmetry residual
/// against 1e-12 (1 + max|entry|) and then stores the exact Hermitian part.
template <typename Real>
class HermitianOperator {
 public:
  explicit HermitianOperator(const Matrix<Real>& m) {
    if (m.rows() < 1 || m.rows() != m.cols())
      throw DomainError("Hermitian operator must be a non-empty square matrix");
    const Real residual = max_abs<Real>(m - m.adjoint());
    const Real tol = Real(1e-12) * (1 + max_abs<Real>(m));
    if (!(residual <= tol))
      throw DomainError("matrix is not Hermitian: symmetry residual " + std::to_string(residual) +
                        " exceeds " + std::to_string(tol));
    m_ = (m + m.adjoint()) / Real(2);
  }

  static HermitianOperator zero(Index n) { return HermitianOperator(Matrix<Real>::Zero(n, n)); }
  static HermitianOperator diagonal(const RealVector<Real>& d) {
    return HermitianOperator(d.template cast<Complex<Real>>().asDiagonal().toDenseMatrix());
  }

  Index dim() const { return m_.rows(); }
  const Matrix<Real>& matrix() const { return m_; }

 private:
  Matrix<Real> m_;
};

/// Dense unitary matrix, U U^H = I within 1e-10 (max-abs).
template <typename Real>
class UnitaryOperator {
 public:
  explicit UnitaryOperator(Matrix<Real> m) : m_(std::move(m)) {
    if (m_.rows() < 1 || m_.rows() != m_.cols())
      throw DomainError("unitary operator must be a non-empty square matrix");
    const Real residual =
        max_abs<Real>(Matrix<Real>(m_ * m_.adjoint() - Matrix<Real>::Identity(m_.rows(), m_.rows())));
    if (!(residual <= Real(1e-10)))
      throw DomainError("matrix is not unitary: residual " + std::to_string(residual));
  }

  static UnitaryOperator identity(Index n) { return UnitaryOperator(Matrix<Real>::Identity(n, n)); }

  Index dim() const { return m_.rows(); }
  const Matrix<Real>& matrix() const { return m_; }
  UnitaryOperator adjoint() const { return UnitaryOperator(m_.adjoint()); }

 private:
  Matrix<Real> m_;
};

using Hermitian = HermitianOperator<double>;
using Unitary = UnitaryOperator<double>;

// ---------------------------------------------------------------------------
// Spectral decomposition

template <typename Real>
struct SpectralDecomposition {
  Vector<Real> eigenvalues;                 // sorted; real or unit modulus
  Matrix<Real> eigenvectors;                // column k belongs to eigenvalues(k)
  std::vector<std::vector<Index>> clusters;  // contiguous index runs (up to wrap-around)
  std::vector<Complex<Real>> cluster_values;
  std::vector<Matrix<Real>> projections;

  Index dim() const { return eigenvectors.rows(); }

  /// Cluster value of the cluster containing eigenvector k, for every k.
  Vector<Real> clustered_eigenvalues() const {
    Vector<Real> v(eigenvalues.size());
    for (std::size_t c = 0; c < clusters.size(); ++c)
      for (Index k : clusters[c]) v(k) = cluster_values[c];
    return v;
  }

  Matrix<Real> reconstruct() const {
    Matrix<Real> m = Matrix<Real>::Zero(dim(), dim());
    for (std::size_t c = 0; c < clusters.size(); ++c) m += cluster_values[c] * projections[c];
    return m;
  }
};

using Spectrum = SpectralDecomposition<double>;

namespace detail {

template <typename Real>
void build_projections(SpectralDecomposition<Real>& sd) {
  sd.projections.clear();
  for (const auto& cluster : sd.clusters) {
    Matrix<Real> basis(sd.dim(), static_cast<Index>(cluster.size()));
    for (std::size_t k = 0; k < cluster.size(); ++k) basis.col(static_cast<Index>(k)) = sd.eigenvectors.col(cluster[k]);
    sd.projections.push_back(basis * basis.adjoint());
  }
}

template <typename Real>
void reorder(SpectralDecomposition<Real>& sd, const std::vector<Index>& order) {
  Vector<Real> vals(sd.eigenvalues.size());
  Matrix<Real> vecs(sd.eigenvectors.rows(), sd.eigenvectors.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    vals(static_cast<Index>(k)) = sd.eigenvalues(order[k]);
    vecs.col(static_cast<Index>(k)) = sd.eigenvectors.col(order[k]);
  }
  sd.eigenvalues = std::move(vals);
  sd.eigenvectors = std::move(vecs);
}

/// Single-linkage chain over consecutive sorted eigenvalues.
template <typename Real>
std::vector<std::vector<Index>> chain_clusters(const Vector<Real>& sorted, Real tol) {
  std::vector<std::vector<Index>> out;
  for (Index k = 0; k < sorted.size(); ++k) {
    if (k == 0 || std::abs(sorted(k) - sorted(k - 1)) > tol)
      out.emplace_back();
    out.back().push_back(k);
  }
  return out;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Eigendecomposition of a Hermitian operator with eigenvalues within
/// cluster_tol of a neighbour merged into one spectral projection.
/// Default tolerance 1e-8 (1 + ||H||_op).
template <typename Real>
SpectralDecomposition<Real> eig_hermitian(const HermitianOperator<Real>& h,
                                          std::optional<Real> cluster_tol = std::nullopt) {
  auto je = joint_jacobi<Real>({h.matrix()});
  SpectralDecomposition<Real> sd;
  sd.eigenvalues = je.diagonals.front().template cast<Complex<Real>>();
  sd.eigenvectors = std::move(je.vectors);

  std::vector<Index> order(static_cast<std::size_t>(h.dim()));
  std::iota(order.begin(), order.end(), Index(0));
  const auto& d = je.diagonals.front();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return d(a) < d(b); });
  detail::reorder(sd, order);

  const Real op = d.cwiseAbs().maxCoeff();
  const Real tol = cluster_tol.value_or(Real(1e-8) * (1 + op));
  if (!(tol > 0)) throw DomainError("cluster tolerance must be positive");

  sd.clusters = detail::chain_clusters<Real>(sd.eigenvalues, tol);
  for (const auto& c : sd.clusters) {
    Real mean = 0;
    for (Index k : c) mean += std::real(sd.eigenvalues(k));
    sd.cluster_values.emplace_back(mean / static_cast<Real>(c.size()));
  }
  detail::build_projections(sd);
  return sd;
}

/// Eigendecomposition of a unitary operator by joint Jacobi on the commuting
/// pair (U + U^H)/2, (U - U^H)/(2i). Eigenvalues are sorted by argument in
/// (-pi, pi] and clustered along the circle, including across the cut.
template <typename Real>
SpectralDecomposition<Real> eig_unitary(const UnitaryOperator<Real>& u,
                                        std::optional<Real> cluster_tol = std::nullopt) {
  using C = Complex<Real>;
  const Matrix<Real>& m = u.matrix();
  const Index n = u.dim();
  Matrix<Real> re = (m + m.adjoint()) / Real(2);
  Matrix<Real> im = (m - m.adjoint()) / C(0, 2);
  auto je = joint_jacobi<Real>({std::move(re), std::move(im)});

  SpectralDecomposition<Real> sd;
  sd.eigenvectors = std::move(je.vectors);
  const Matrix<Real> rotated = sd.eigenvectors.adjoint() * m * sd.eigenvectors;
  sd.eigenvalues.resize(n);
  std::vector<Real> args(static_cast<std::size_t>(n));
  for (Index k = 0; k < n; ++k) {
    C lambda = rotated(k, k);
    lambda /= std::abs(lambda);
    sd.eigenvalues(k) = lambda;
    Real a = std::arg(lambda);
    if (a <= -kPi + 8 * std::numeric_limits<Real>::epsilon()) a = Real(kPi);
    args[static_cast<std::size_t>(k)] = a;
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return args[a] < args[b]; });
  detail::reorder(sd, order);

  const Real tol = cluster_tol.value_or(Real(2e-8));
  if (!(tol > 0)) throw DomainError("cluster tolerance must be positive");
  sd.clusters = detail::chain_clusters<Real>(sd.eigenvalues, tol);
  if (sd.clusters.size() > 1 &&
      std::abs(sd.eigenvalues(0) - sd.eigenvalues(n - 1)) <= tol) {
    auto& first = sd.clusters.front();
    first.insert(first.begin(), sd.clusters.back().begin(), sd.clusters.back().end());
    sd.clusters.pop_back();
  }
  for (const auto& c : sd.clusters) {
    C sum(0);
    for (Index k : c) sum += sd.eigenvalues(k);
    sd.cluster_values.push_back(sum / std::abs(sum));
  }
  detail::build_projections(sd);
  return sd;
}

// ---------------------------------------------------------------------------
// Schatten norms

/// Singular values (descending) from the eigenvalues of the smaller Gram matrix.
template <typename Derived>
auto singular_values(const Eigen::MatrixBase<Derived>& m) {
  using C = typename Derived::Scalar;
  using Real = typename C::value_type;
  Matrix<Real> gram = m.cols() <= m.rows() ? Matrix<Real>(m.adjoint() * m) : Matrix<Real>(m * m.adjoint());
  RealVector<Real> s;
  if (gram.rows() == 0) return s;
  gram = (gram + gram.adjoint()).eval() / Real(2);
  auto je = joint_jacobi<Real>({std::move(gram)});
  s = je.diagonals.front().cwiseMax(Real(0)).cwiseSqrt();
  std::sort(s.data(), s.data() + s.size(), std::greater<Real>());
  return s;
}

template <typename Real>
Real schatten_from_singular(const RealVector<Real>& s, const SchattenExponent& p) {
  if (s.size() == 0) return 0;
  const Real top = s.maxCoeff();
  if (top == 0) return 0;
  if (p.is_infinite()) return top;
  const Real pv = static_cast<Real>(p.value());
  Real acc = 0;
  for (Index k = 0; k < s.size(); ++k) acc += std::pow(s(k) / top, pv);
  return top * std::pow(acc, 1 / pv);
}

/// (sum s_k^p)^(1/p) over singular values; the largest singular value for p = inf.
template <typename Derived>
auto schatten_norm(const Eigen::MatrixBase<Derived>& m, const SchattenExponent& p) {
  using Real = typename Derived::Scalar::value_type;
  return schatten_from_singular<Real>(singular_values(m), p);
}

template <typename Real>
Real operator_norm(const Matrix<Real>& m) {
  return schatten_norm(m, SchattenExponent::infinity());
}

// ---------------------------------------------------------------------------
// Exponential and logarithm

/// e^{itA} = sum e^{it lambda} P_lambda from an existing Hermitian decomposition.
template <typename Real>
Matrix<Real> exp_i(const SpectralDecomposition<Real>& sd, Real t = 1) {
  Vector<Real> phases(sd.eigenvalues.size());
  for (Index k = 0; k < phases.size(); ++k) phases(k) = std::polar(Real(1), t * std::real(sd.eigenvalues(k)));
  return sd.eigenvectors * phases.asDiagonal() * sd.eigenvectors.adjoint();
}

template <typename Real>
UnitaryOperator<Real> matrix_exp_i(const HermitianOperator<Real>& h) {
  return UnitaryOperator<Real>(exp_i(eig_hermitian(h)));
}

/// Self-adjoint A with e^{iA} = U and spectrum in (-pi, pi]; the eigenvalue -1
/// is assigned +pi.
template <typename Real>
HermitianOperator<Real> unitary_log(const UnitaryOperator<Real>& u) {
  const auto sd = eig_unitary(u);
  RealVector<Real> theta(u.dim());
  for (Index k = 0; k < theta.size(); ++k) {
    Real a = std::arg(sd.eigenvalues(k));
    if (a <= -kPi + 8 * std::numeric_limits<Real>::epsilon()) a = Real(kPi);
    theta(k) = a;
  }
  Matrix<Real> a = sd.eigenvectors * theta.template cast<Complex<Real>>().asDiagonal() *
                   sd.eigenvectors.adjoint();
  return HermitianOperator<Real>((a + a.adjoint()) / Real(2));
}

// ---------------------------------------------------------------------------
// Direct sums

template <typename Real>
class BlockDiagonal {
 public:
  explicit BlockDiagonal(std::vector<Matrix<Real>> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw DomainError("direct sum of an empty list of blocks");
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      if (blocks_[k].rows() != blocks_[k].cols())
        throw DomainError("direct sum block " + std::to_string(k) + " is not square");
      dim_ += blocks_[k].rows();
    }
  }

  const std::vector<Matrix<Real>>& blocks() const { return blocks_; }
  Index dim() const { return dim_; }

  Matrix<Real> dense() const {
    Matrix<Real> m = Matrix<Real>::Zero(dim_, dim_);
    Index at = 0;
    for (const auto& b : blocks_) {
      m.block(at, at, b.rows(), b.cols()) = b;
      at += b.rows();
    }
    return m;
  }

 private:
  std::vector<Matrix<Real>> blocks_;
  Index dim_ = 0;
};

template <typename Real>
BlockDiagonal<Real> direct_sum(std::vector<Matrix<Real>> blocks) {
  return BlockDiagonal<Real>(std::move(blocks));
}

/// Norm of the assembled block-diagonal matrix.
template <typename Real>
Real schatten_norm(const BlockDiagonal<Real>& bd, const SchattenExponent& p) {
  return schatten_norm(bd.dense(), p);
}

// ---------------------------------------------------------------------------
// Random sampling

template <typename Real, typename Rng>
Matrix<Real> complex_gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<Real> g(0, std::sqrt(Real(0.5)));
  Matrix<Real> z(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) {
      const Real re = g(rng);
      const Real im = g(rng);
      z(i, j) = Complex<Real>(re, im);
    }
  return z;
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of
/// diag(R) moved into Q so the factorization is unique.
template <typename Real, typename Rng>
UnitaryOperator<Real> haar_unitary(Index n, Rng& rng) {
  if (n < 1) throw DomainError("haar_unitary: dimension must be positive");
  const Matrix<Real> z = complex_gaussian<Real>(n, n, rng);
  Eigen::HouseholderQR<Matrix<Real>> qr(z);
  Matrix<Real> q = qr.householderQ();
  const Matrix<Real>& r = qr.matrixQR();
  for (Index k = 0; k < n; ++k) {
    const Complex<Real> d = r(k, k);
    const Real a = std::abs(d);
    q.col(k) *= a > 0 ? d / a : Complex<Real>(1);
  }
  return UnitaryOperator<Real>(std::move(q));
}

template <typename Real = double>
UnitaryOperator<Real> haar_unitary(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(detail::splitmix64(seed));
  return haar_unitary<Real>(n, rng);
}

/// Gaussian Hermitian matrix scaled to operator norm u, u uniform in [0, 1].
template <typename Real, typename Rng>
HermitianOperator<Real> random_hermitian_contraction(Index n, Rng& rng) {
  if (n < 1) throw DomainError("random_hermitian_contraction: dimension must be positive");
  const Matrix<Real> z = complex_gaussian<Real>(n, n, rng);
  Matrix<Real> h = (z + z.adjoint()) / Real(2);
  std::uniform_real_distribution<Real> unit(0, 1);
  const Real u = unit(rng);
  const Real op = operator_norm<Real>(h);
  if (op > 0) h *= u / op;
  return HermitianOperator<Real>(h);
}

template <typename Real = double>
HermitianOperator<Real> random_hermitian_contraction(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(detail::splitmix64(seed));
  return random_hermitian_contraction<Real>(n, rng);
}

}  // namespace opfunc

#endif  // OPFUNC_OPCORE_HPP
