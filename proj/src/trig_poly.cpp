#include "opfunc/trig_poly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace opfunc {

// SupportMask -----------------------------------------------------------------

SupportMask SupportMask::full(std::optional<int> cutoff) {
  SupportMask m;
  m.rule_ = Rule::Full;
  m.cutoff_ = cutoff;
  return m;
}

SupportMask SupportMask::quadrant(std::optional<int> cutoff) {
  SupportMask m;
  m.rule_ = Rule::Quadrant;
  m.cutoff_ = cutoff;
  return m;
}

SupportMask SupportMask::sector(double lo, double hi, std::optional<int> cutoff) {
  if (!(lo <= hi)) throw DomainError("sector mask needs lo <= hi");
  SupportMask m;
  m.rule_ = Rule::Sector;
  m.lo_ = lo;
  m.hi_ = hi;
  m.cutoff_ = cutoff;
  return m;
}

SupportMask SupportMask::finite(std::set<std::pair<int, int>> points) {
  SupportMask m;
  m.rule_ = Rule::Finite;
  m.points_ = std::move(points);
  return m;
}

bool SupportMask::contains(int n1, int n2) const {
  if (cutoff_ && (std::abs(n1) > *cutoff_ || std::abs(n2) > *cutoff_)) return false;
  switch (rule_) {
    case Rule::Finite:
      return points_.count({n1, n2}) > 0;
    case Rule::Full:
      return true;
    case Rule::Quadrant:
      return n1 >= 0 && n2 >= 0;
    case Rule::Sector: {
      if (n1 == 0 && n2 == 0) return true;
      const double a = std::atan2(static_cast<double>(n2), static_cast<double>(n1));
      return a >= lo_ && a <= hi_;
    }
  }
  return false;
}

std::string SupportMask::describe() const {
  std::ostringstream os;
  switch (rule_) {
    case Rule::Finite: os << "finite(" << points_.size() << " points)"; break;
    case Rule::Full: os << "full"; break;
    case Rule::Quadrant: os << "quadrant"; break;
    case Rule::Sector: os << "sector[" << lo_ << ", " << hi_ << "]"; break;
  }
  if (cutoff_) os << " cutoff " << *cutoff_;
  return os.str();
}

// TrigPoly ----------------------------------------------------------------------

TrigPoly::TrigPoly(int dim) : dim_(dim) {
  if (dim < 1 || dim > 3) throw DomainError("trigonometric polynomials are supported for d = 1, 2, 3");
}

TrigPoly TrigPoly::constant(int dim, cd c) { return monomial(dim, {0, 0, 0}, c); }

TrigPoly TrigPoly::monomial(int dim, MultiIndex j, cd c) {
  TrigPoly f(dim);
  f.set(j, c);
  return f;
}

void TrigPoly::check_index(const MultiIndex& j) const {
  for (int i = dim_; i < 3; ++i)
    if (j[i] != 0) throw DomainError("multi-index has a nonzero component beyond the dimension");
}

cd TrigPoly::coeff(const MultiIndex& j) const {
  auto it = coeffs_.find(j);
  return it == coeffs_.end() ? cd(0) : it->second;
}

void TrigPoly::set(const MultiIndex& j, cd value) {
  check_index(j);
  if (value == cd(0)) {
    coeffs_.erase(j);
    return;
  }
  if (mask_ && !mask_->contains(j[0], j[1]))
    throw DomainError("coefficient (" + std::to_string(j[0]) + ", " + std::to_string(j[1]) +
                      ") lies outside the support mask");
  coeffs_[j] = value;
}

int TrigPoly::degree() const {
  const auto d = degrees();
  return std::max({d[0], d[1], d[2]});
}

MultiIndex TrigPoly::lower() const {
  MultiIndex lo{0, 0, 0};
  bool first = true;
  for (const auto& [j, c] : coeffs_) {
    for (int i = 0; i < 3; ++i) lo[i] = first ? j[i] : std::min(lo[i], j[i]);
    first = false;
  }
  return lo;
}

MultiIndex TrigPoly::upper() const {
  MultiIndex hi{0, 0, 0};
  bool first = true;
  for (const auto& [j, c] : coeffs_) {
    for (int i = 0; i < 3; ++i) hi[i] = first ? j[i] : std::max(hi[i], j[i]);
    first = false;
  }
  return hi;
}

MultiIndex TrigPoly::degrees() const {
  const auto lo = lower(), hi = upper();
  MultiIndex d{};
  for (int i = 0; i < 3; ++i) d[i] = std::max(std::abs(lo[i]), std::abs(hi[i]));
  return d;
}

cd TrigPoly::evaluate(double x, double y, double z) const {
  cd sum = 0;
  for (const auto& [j, c] : coeffs_) sum += c * std::polar(1.0, j[0] * x + j[1] * y + j[2] * z);
  return sum;
}

bool TrigPoly::is_real_valued(double tol) const {
  for (const auto& [j, c] : coeffs_) {
    const MultiIndex neg{-j[0], -j[1], -j[2]};
    if (std::abs(coeff(neg) - std::conj(c)) > tol) return false;
  }
  return true;
}

bool TrigPoly::is_analytic() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](const auto& kv) {
    return kv.first[0] >= 0 && kv.first[1] >= 0 && kv.first[2] >= 0;
  });
}

void TrigPoly::set_support_mask(std::optional<SupportMask> mask) {
  if (mask) {
    if (dim_ != 2) throw DomainError("support masks apply to d = 2 polynomials");
    for (const auto& [j, c] : coeffs_)
      if (!mask->contains(j[0], j[1]))
        throw DomainError("existing coefficient (" + std::to_string(j[0]) + ", " +
                          std::to_string(j[1]) + ") lies outside the support mask");
  }
  mask_ = std::move(mask);
}

TrigPoly& TrigPoly::operator*=(cd s) {
  if (s == cd(0)) {
    coeffs_.clear();
    return *this;
  }
  for (auto& [j, c] : coeffs_) c *= s;
  return *this;
}

TrigPoly& TrigPoly::operator+=(const TrigPoly& other) {
  if (other.dim_ != dim_) throw DomainError("adding trigonometric polynomials of different dimension");
  for (const auto& [j, c] : other.coeffs_) add(j, c);
  return *this;
}

// Grid evaluation -----------------------------------------------------------------

namespace {

/// E(a, t) = exp(i (lo + t) 2 pi a / n), computed from an exact root table.
MatrixXcd grid_exponentials(int n, int lo, int count) {
  std::vector<cd> roots(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) roots[a] = std::polar(1.0, 2 * kPi * a / n);
  MatrixXcd e(n, count);
  for (int a = 0; a < n; ++a)
    for (int t = 0; t < count; ++t) {
      long long r = (static_cast<long long>(lo + t) * a) % n;
      if (r < 0) r += n;
      e(a, t) = roots[static_cast<std::size_t>(r)];
    }
  return e;
}

MatrixXcd angle_exponentials(const VectorXd& x, int lo, int count) {
  MatrixXcd e(x.size(), count);
  for (Index a = 0; a < x.size(); ++a)
    for (int t = 0; t < count; ++t) e(a, t) = std::polar(1.0, (lo + t) * x(a));
  return e;
}

struct DenseBox {
  MultiIndex lo{}, n{1, 1, 1};
  VectorXcd c;  // row-major in (i1, i2, i3)
};

DenseBox dense_box(const TrigPoly& f) {
  DenseBox box;
  box.lo = f.lower();
  const auto hi = f.upper();
  for (int i = 0; i < 3; ++i) box.n[i] = hi[i] - box.lo[i] + 1;
  box.c = VectorXcd::Zero(static_cast<Index>(box.n[0]) * box.n[1] * box.n[2]);
  for (const auto& [j, c] : f.coefficients()) {
    const Index at = (static_cast<Index>(j[0] - box.lo[0]) * box.n[1] + (j[1] - box.lo[1])) * box.n[2] +
                     (j[2] - box.lo[2]);
    box.c(at) = c;
  }
  return box;
}

/// Shared separable evaluation given exponential matrices per dimension.
VectorXcd separable_values(const DenseBox& box, int dim, const MatrixXcd& e1, const MatrixXcd& e2,
                           const MatrixXcd& e3) {
  const Index n1 = box.n[0], n2 = box.n[1], n3 = box.n[2];
  if (dim == 1) return e1 * box.c;
  if (dim == 2) {
    Eigen::Map<const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(box.c.data(), n1, n2);
    const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> v = e1 * c * e2.transpose();
    return Eigen::Map<const VectorXcd>(v.data(), v.size());
  }
  Eigen::Map<const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(box.c.data(), n1 * n2, n3);
  const MatrixXcd t = c * e3.transpose();  // (n1 n2) x N3
  const Index g1 = e1.rows(), g2 = e2.rows(), g3 = e3.rows();
  VectorXcd out(g1 * g2 * g3);
  Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> slice(n1, n2);
  for (Index z = 0; z < g3; ++z) {
    for (Index i = 0; i < n1; ++i)
      for (Index k = 0; k < n2; ++k) slice(i, k) = t(i * n2 + k, z);
    const MatrixXcd v = e1 * slice * e2.transpose();
    for (Index a = 0; a < g1; ++a)
      for (Index b = 0; b < g2; ++b) out((a * g2 + b) * g3 + z) = v(a, b);
  }
  return out;
}

}  // namespace

MultiIndex default_grid(const TrigPoly& f) {
  const auto lo = f.lower(), hi = f.upper();
  MultiIndex g{1, 1, 1};
  for (int i = 0; i < f.dim(); ++i) g[i] = 8 * std::max(hi[i] - lo[i], 1);
  return g;
}

VectorXcd grid_values(const TrigPoly& f, const MultiIndex& grid) {
  if (f.is_zero()) {
    Index total = 1;
    for (int i = 0; i < f.dim(); ++i) total *= grid[i];
    return VectorXcd::Zero(total);
  }
  const DenseBox box = dense_box(f);
  MatrixXcd e[3];
  for (int i = 0; i < 3; ++i)
    e[i] = i < f.dim() ? grid_exponentials(grid[i], box.lo[i], box.n[i]) : MatrixXcd::Ones(1, 1);
  return separable_values(box, f.dim(), e[0], e[1], e[2]);
}

double grid_sup(const TrigPoly& f, const MultiIndex& grid) {
  if (f.is_zero()) return 0;
  return grid_values(f, grid).cwiseAbs().maxCoeff();
}

double sup_norm(const TrigPoly& f) { return grid_sup(f, default_grid(f)); }

MatrixXcd evaluate_on_product(const TrigPoly& f, const VectorXd& x, const VectorXd& y) {
  if (f.dim() != 2) throw DomainError("evaluate_on_product(x, y) needs a d = 2 polynomial");
  if (f.is_zero()) return MatrixXcd::Zero(x.size(), y.size());
  const DenseBox box = dense_box(f);
  const MatrixXcd e1 = angle_exponentials(x, box.lo[0], box.n[0]);
  const MatrixXcd e2 = angle_exponentials(y, box.lo[1], box.n[1]);
  Eigen::Map<const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(box.c.data(), box.n[0],
                                                                                        box.n[1]);
  return e1 * c * e2.transpose();
}

std::vector<MatrixXcd> evaluate_on_product(const TrigPoly& f, const VectorXd& x, const VectorXd& y,
                                           const VectorXd& z) {
  if (f.dim() != 3) throw DomainError("evaluate_on_product(x, y, z) needs a d = 3 polynomial");
  std::vector<MatrixXcd> out(static_cast<std::size_t>(z.size()), MatrixXcd::Zero(x.size(), y.size()));
  if (f.is_zero()) return out;
  const DenseBox box = dense_box(f);
  const MatrixXcd e1 = angle_exponentials(x, box.lo[0], box.n[0]);
  const MatrixXcd e2 = angle_exponentials(y, box.lo[1], box.n[1]);
  const MatrixXcd e3 = angle_exponentials(z, box.lo[2], box.n[2]);
  const Index n1 = box.n[0], n2 = box.n[1], n3 = box.n[2];
  Eigen::Map<const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> c(box.c.data(), n1 * n2, n3);
  const MatrixXcd t = c * e3.transpose();
  Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> slice(n1, n2);
  for (Index w = 0; w < z.size(); ++w) {
    for (Index i = 0; i < n1; ++i)
      for (Index k = 0; k < n2; ++k) slice(i, k) = t(i * n2 + k, w);
    out[static_cast<std::size_t>(w)] = e1 * slice * e2.transpose();
  }
  return out;
}

// Exchange format -------------------------------------------------------------------

void write_trig_poly(std::ostream& os, const TrigPoly& f) {
  os << "d " << f.dim() << " degree " << f.degree() << '\n';
  char buf[64];
  for (const auto& [j, c] : f.coefficients()) {
    for (int i = 0; i < f.dim(); ++i) os << j[i] << ' ';
    std::snprintf(buf, sizeof buf, "%.17g", c.real());
    os << buf << ' ';
    std::snprintf(buf, sizeof buf, "%.17g", c.imag());
    os << buf << '\n';
  }
}

TrigPoly read_trig_poly(std::istream& is) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError("polynomial file: missing header 'd <dim> degree <box>'");
  std::istringstream header(line);
  std::string kd, kdeg;
  int dim = 0, box = -1;
  if (!(header >> kd >> dim >> kdeg >> box) || kd != "d" || kdeg != "degree")
    throw ParseError("polynomial file: expected header 'd <dim> degree <box>'");
  if (dim < 1 || dim > 3) throw ParseError("polynomial file: dimension must be 1, 2 or 3");
  if (box < 0) throw ParseError("polynomial file: degree box must be nonnegative");

  TrigPoly f(dim);
  int line_no = 1;
  while (next_line()) {
    ++line_no;
    std::istringstream row(line);
    MultiIndex j{0, 0, 0};
    for (int i = 0; i < dim; ++i)
      if (!(row >> j[i])) throw ParseError("polynomial file: bad index on entry " + std::to_string(line_no));
    std::string re_s, im_s, extra;
    if (!(row >> re_s >> im_s) || (row >> extra))
      throw ParseError("polynomial file: expected 'indices re im' on entry " + std::to_string(line_no));
    char* end = nullptr;
    const double re = std::strtod(re_s.c_str(), &end);
    if (*end != '\0') throw ParseError("polynomial file: bad real part '" + re_s + "'");
    const double im = std::strtod(im_s.c_str(), &end);
    if (*end != '\0') throw ParseError("polynomial file: bad imaginary part '" + im_s + "'");
    for (int i = 0; i < dim; ++i)
      if (std::abs(j[i]) > box)
        throw ParseError("polynomial file: index outside the declared degree box on entry " +
                         std::to_string(line_no));
    if (f.coeff(j) != cd(0)) throw ParseError("polynomial file: duplicate index on entry " + std::to_string(line_no));
    f.set(j, cd(re, im));
  }
  return f;
}

TrigPoly load_trig_poly(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open polynomial file " + path);
  try {
    return read_trig_poly(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_trig_poly(const std::string& path, const TrigPoly& f) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write polynomial file " + path);
  write_trig_poly(out, f);
}

}  // namespace opfunc
