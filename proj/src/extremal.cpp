#include "opfunc/extremal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace opfunc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double pth_power(double x, const SchattenExponent& p) { return std::pow(x, p.value()); }

bool same_matrix(const Hermitian& a, const Hermitian& b) { return a.matrix() == b.matrix(); }

Hermitian lerp(const Hermitian& a, const Hermitian& b, int j, int n) {
  if (j == 0) return a;
  if (j == n) return b;
  const double t = static_cast<double>(j) / n;
  return Hermitian(a.matrix() + t * (b.matrix() - a.matrix()));
}

Hermitian project_contraction(const MatrixXcd& m) {
  const double op = operator_norm<double>(m);
  return Hermitian(op > 1 ? MatrixXcd(m / op) : m);
}

void check_contraction(const Hermitian& h, const char* name) {
  const double op = operator_norm<double>(h.matrix());
  if (op > 1 + 1e-12) throw DomainError(std::string(name) + " is not a contraction: ||.|| = " + std::to_string(op));
}

TrigPoly random_poly(int dim, int degree, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  TrigPoly f(dim);
  const int h2 = dim >= 2 ? degree : 0, h3 = dim >= 3 ? degree : 0;
  for (int a = -degree; a <= degree; ++a)
    for (int b = -h2; b <= h2; ++b)
      for (int c = -h3; c <= h3; ++c) {
        const double decay = 1.0 / (1 + std::abs(a) + std::abs(b) + std::abs(c));
        f.set({a, b, c}, decay * cd(g(rng), g(rng)));
      }
  return f;
}

Hermitian random_direction(Index n, std::mt19937_64& rng) {
  const MatrixXcd z = complex_gaussian<double>(n, n, rng);
  MatrixXcd h = (z + z.adjoint()) / 2.0;
  const double op = operator_norm<double>(h);
  if (op > 0) h /= op;
  return Hermitian(h);
}

}  // namespace

std::string to_string(NormMode mode) { return mode == NormMode::Besov ? "besov" : "sup"; }

std::string to_string(OperatorMode mode) {
  switch (mode) {
    case OperatorMode::Hermitian: return "hermitian";
    case OperatorMode::Unitary: return "unitary";
    case OperatorMode::Triple: return "triple";
  }
  return "?";
}

NormMode parse_norm_mode(const std::string& text) {
  if (text == "besov" || text == "BESOV") return NormMode::Besov;
  if (text == "sup" || text == "SUP") return NormMode::Sup;
  throw ParseError("unknown norm mode '" + text + "' (expected besov or sup)");
}

OperatorMode parse_operator_mode(const std::string& text) {
  if (text == "hermitian") return OperatorMode::Hermitian;
  if (text == "unitary") return OperatorMode::Unitary;
  if (text == "triple") return OperatorMode::Triple;
  throw ParseError("unknown mode '" + text + "' (expected hermitian, unitary or triple)");
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Random: return "random";
    case FamilyKind::Triangular: return "triangular";
    case FamilyKind::Optimized: return "optimized";
  }
  return "?";
}

// RatioInstance ------------------------------------------------------------------

OperatorMode RatioInstance::mode() const {
  return std::visit(overloaded{[](const HermitianPairOps&) { return OperatorMode::Hermitian; },
                               [](const UnitaryPairOps&) { return OperatorMode::Unitary; },
                               [](const TripleOps&) { return OperatorMode::Triple; }},
                    ops);
}

Index RatioInstance::dim() const {
  return std::visit(overloaded{[](const HermitianPairOps& o) { return o.a1.dim(); },
                               [](const UnitaryPairOps& o) { return o.u1.dim(); },
                               [](const TripleOps& o) { return o.a.dim(); }},
                    ops);
}

bool RatioInstance::two_sided() const {
  const auto* h = std::get_if<HermitianPairOps>(&ops);
  return h && !same_matrix(h->b1, h->b2);
}

void RatioInstance::validate() const {
  if (!(dilation > 0)) throw DomainError("dilation must be positive");
  const Index n = dim();
  auto same = [n](Index k) {
    if (k != n) throw DomainError("operator dimensions differ");
  };
  std::visit(overloaded{[&](const HermitianPairOps& o) {
                          if (f.dim() != 2) throw DomainError("pair instance needs a d = 2 polynomial");
                          same(o.a2.dim()), same(o.b1.dim()), same(o.b2.dim());
                          if (contractions) {
                            check_contraction(o.a1, "A1"), check_contraction(o.a2, "A2");
                            check_contraction(o.b1, "B1"), check_contraction(o.b2, "B2");
                          }
                        },
                        [&](const UnitaryPairOps& o) {
                          if (f.dim() != 2) throw DomainError("pair instance needs a d = 2 polynomial");
                          if (dilation != 1.0) throw DomainError("unitary instances use dilation 1");
                          same(o.u2.dim()), same(o.v.dim());
                        },
                        [&](const TripleOps& o) {
                          if (f.dim() != 3) throw DomainError("triple instance needs a d = 3 polynomial");
                          same(o.b.dim()), same(o.c1.dim()), same(o.c2.dim());
                          if (contractions) {
                            check_contraction(o.a, "A"), check_contraction(o.b, "B");
                            check_contraction(o.c1, "C1"), check_contraction(o.c2, "C2");
                          }
                        }},
             ops);
}

MatrixXcd increment(const RatioInstance& inst) {
  const double s = inst.dilation;
  return std::visit(
      overloaded{[&](const HermitianPairOps& o) -> MatrixXcd {
                   const Spectrum b1 = eig_hermitian(o.b1);
                   const Spectrum b2 = same_matrix(o.b1, o.b2) ? b1 : eig_hermitian(o.b2);
                   return eval_pair_trig(inst.f, eig_hermitian(o.a1), b1, false, s) -
                          eval_pair_trig(inst.f, eig_hermitian(o.a2), b2, false, s);
                 },
                 [&](const UnitaryPairOps& o) -> MatrixXcd {
                   const Spectrum v = eig_unitary(o.v);
                   return eval_pair_trig(inst.f, eig_unitary(o.u1), v, true) -
                          eval_pair_trig(inst.f, eig_unitary(o.u2), v, true);
                 },
                 [&](const TripleOps& o) -> MatrixXcd {
                   const Spectrum a = eig_hermitian(o.a), b = eig_hermitian(o.b);
                   return eval_triple_trig(inst.f, a, b, eig_hermitian(o.c1), s) -
                          eval_triple_trig(inst.f, a, b, eig_hermitian(o.c2), s);
                 }},
      inst.ops);
}

double increment_norm(const RatioInstance& inst) { return schatten_norm(increment(inst), inst.p); }

double perturbation_norm(const RatioInstance& inst) {
  const auto& p = inst.p;
  return std::visit(overloaded{[&](const HermitianPairOps& o) {
                                 double r = schatten_norm(MatrixXcd(o.a1.matrix() - o.a2.matrix()), p);
                                 if (!same_matrix(o.b1, o.b2))
                                   r += schatten_norm(MatrixXcd(o.b1.matrix() - o.b2.matrix()), p);
                                 return r;
                               },
                               [&](const UnitaryPairOps& o) {
                                 return schatten_norm(MatrixXcd(o.u1.matrix() - o.u2.matrix()), p);
                               },
                               [&](const TripleOps& o) {
                                 return schatten_norm(MatrixXcd(o.c1.matrix() - o.c2.matrix()), p);
                               }},
                    inst.ops);
}

double function_norm(const TrigPoly& f, double dilation, NormMode mode) {
  return mode == NormMode::Besov ? dilation * besov_norm(f, 1) : sup_norm(f);
}

double function_norm(const RatioInstance& inst) { return function_norm(inst.f, inst.dilation, inst.norm_mode); }

double lipschitz_ratio(const RatioInstance& inst) {
  const double pert = perturbation_norm(inst);
  if (!(pert > 1e-14)) throw DomainError("perturbation norm is zero; the ratio is undefined");
  const double fn = function_norm(inst);
  if (!(fn > 0)) throw DomainError("function norm is zero; the ratio is undefined");
  return increment_norm(inst) / (fn * pert);
}

// Subdivision and paths -----------------------------------------------------------

SubdivisionStep subdivide_select(const RatioInstance& inst, int n) {
  if (n < 1) throw DomainError("subdivide_select needs N >= 1");
  if (inst.mode() == OperatorMode::Unitary)
    throw DomainError("subdivide_select works on Hermitian and triple instances");
  if (n == 1) return SubdivisionStep{0, inst, lipschitz_ratio(inst)};

  const double fn = function_norm(inst);
  if (!(fn > 0)) throw DomainError("function norm is zero; the ratio is undefined");

  std::optional<SubdivisionStep> best;
  for (int j = 0; j < n; ++j) {
    RatioInstance step = inst;
    if (const auto* o = std::get_if<HermitianPairOps>(&inst.ops)) {
      step.ops = HermitianPairOps{lerp(o->a1, o->a2, j, n), lerp(o->a1, o->a2, j + 1, n), lerp(o->b1, o->b2, j, n),
                                  lerp(o->b1, o->b2, j + 1, n)};
    } else {
      const auto& t = std::get<TripleOps>(inst.ops);
      step.ops = TripleOps{t.a, t.b, lerp(t.c1, t.c2, j, n), lerp(t.c1, t.c2, j + 1, n)};
    }
    const double pert = perturbation_norm(step);
    if (!(pert > 1e-14)) throw DomainError("perturbation norm is zero; the ratio is undefined");
    const double r = increment_norm(step) / (fn * pert);
    if (!best || r > best->ratio) best = SubdivisionStep{j, std::move(step), r};
  }
  return *best;
}

std::vector<Unitary> unitary_path(const Unitary& u1, const Unitary& u2, int n) {
  if (n < 1) throw DomainError("unitary_path needs N >= 1");
  const Hermitian a = unitary_log(Unitary(u1.matrix().adjoint() * u2.matrix()));
  const Spectrum sa = eig_hermitian(a);
  std::vector<Unitary> path{u1};
  for (int k = 1; k <= n; ++k)
    path.emplace_back(u1.matrix() * exp_i(sa, static_cast<double>(k) / n));
  return path;
}

// Support masks ----------------------------------------------------------------------

namespace {

// Inclusive prefix counts of mask membership over [-reach, reach]^2.
class MaskCounts {
 public:
  MaskCounts(const SupportMask& mask, int reach) : reach_(reach), w_(2 * reach + 2), sum_(w_ * w_, 0) {
    for (int a = -reach; a <= reach; ++a)
      for (int b = -reach; b <= reach; ++b) {
        const int in = mask.contains(a, b) ? 1 : 0;
        at(a + reach + 1, b + reach + 1) =
            in + at(a + reach, b + reach + 1) + at(a + reach + 1, b + reach) - at(a + reach, b + reach);
      }
  }

  // Every point of [n1, n1+side] x [n2, n2+side] lies in the mask.
  bool full(int n1, int n2, int side) const {
    const int x0 = n1 + reach_, y0 = n2 + reach_, x1 = x0 + side + 1, y1 = y0 + side + 1;
    const long long count = get(x1, y1) - get(x0, y1) - get(x1, y0) + get(x0, y0);
    return count == static_cast<long long>(side + 1) * (side + 1);
  }

 private:
  long long& at(int i, int j) { return sum_[static_cast<std::size_t>(i) * w_ + j]; }
  long long get(int i, int j) const { return sum_[static_cast<std::size_t>(i) * w_ + j]; }

  int reach_;
  std::size_t w_;
  std::vector<long long> sum_;
};

}  // namespace

std::optional<int> kappa_lambda(const SupportMask& mask, int m, int n_max) {
  if (m < 1) throw DomainError("kappa_lambda needs m >= 1");
  const int n_min = std::max(1, (m + 1) / 2);
  if (n_max < n_min) return std::nullopt;
  const MaskCounts counts(mask, n_max);
  std::optional<int> best;
  for (int n1 = -n_max; n1 <= n_max - m; ++n1)
    for (int n2 = -n_max; n2 <= n_max - m; ++n2) {
      const int need = std::max({n_min, -n1, -n2, n1 + m, n2 + m});
      if (best && need >= *best) continue;
      if (counts.full(n1, n2, m)) best = need;
    }
  return best;
}

std::optional<std::pair<int, int>> find_square(const SupportMask& mask, int side, int reach) {
  if (side < 0 || reach < 0) throw DomainError("find_square needs nonnegative side and reach");
  const MaskCounts counts(mask, reach);
  std::optional<std::pair<int, int>> best;
  int best_reach = 0;
  for (int n1 = -reach; n1 + side <= reach; ++n1)
    for (int n2 = -reach; n2 + side <= reach; ++n2) {
      const int r = std::max({std::abs(n1), std::abs(n2), std::abs(n1 + side), std::abs(n2 + side)});
      if (best && r >= best_reach) continue;
      if (counts.full(n1, n2, side)) best = std::make_pair(n1, n2), best_reach = r;
    }
  return best;
}

// Seeded candidates --------------------------------------------------------------

RatioInstance seeded_family(int m, FamilyKind kind, SchattenExponent p, NormMode norm_mode, std::uint64_t seed,
                            const std::optional<SupportMask>& mask) {
  if (m < 2) throw DomainError("seeded_family needs m >= 2");
  const Index n = m;
  MatrixXcd v = MatrixXcd::Zero(n, n), shift = MatrixXcd::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    v(k, k) = std::polar(1.0, 2 * kPi * static_cast<double>(k) / m);
    shift((k + 1) % n, k) = 1;
  }
  const Unitary u2(shift), u1(std::polar(1.0, kPi / m) * shift);

  const int deg = 4 * m - 2;
  TrigPoly f(2);
  if (kind == FamilyKind::Random) {
    std::mt19937_64 rng(detail::splitmix64(seed ^ (static_cast<std::uint64_t>(m) << 32)));
    std::normal_distribution<double> g;
    for (int j = 0; j <= deg; ++j)
      for (int k = 0; k <= deg; ++k) f.set({j, k, 0}, cd(g(rng), g(rng)));
  } else {
    std::vector<cd> c(static_cast<std::size_t>((deg + 1) * (deg + 1)));
    auto at = [&](int j, int k) -> cd& { return c[static_cast<std::size_t>(j * (deg + 1) + k)]; };
    for (int j = 0; j <= deg; ++j)
      for (int k = 0; k <= deg; ++k) at(j, k) = 1.0 / (j - k + 0.5);
    if (kind == FamilyKind::Optimized) {
      // U2^m = V^m = I, so f(U2, V) = sum over residues (a, b) of the class
      // sums times U2^a V^b; these matrices are linearly independent.
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          cd sum = 0;
          int count = 0;
          for (int j = a; j <= deg; j += m)
            for (int k = b; k <= deg; k += m) sum += at(j, k), ++count;
          for (int j = a; j <= deg; j += m)
            for (int k = b; k <= deg; k += m) at(j, k) -= sum / static_cast<double>(count);
        }
    }
    for (int j = 0; j <= deg; ++j)
      for (int k = 0; k <= deg; ++k) f.set({j, k, 0}, at(j, k));
  }

  if (mask) {
    if (const auto corner = find_square(*mask, deg, 16 * m)) {
      f = modulate(f, corner->first, corner->second);
    } else {
      TrigPoly cut(2);
      for (const auto& [j, c] : f.coefficients())
        if (mask->contains(j[0], j[1])) cut.set(j, c);
      if (cut.is_zero()) throw DomainError("support mask leaves no coefficients in the degree box");
      f = std::move(cut);
    }
    f.set_support_mask(*mask);
  }

  return RatioInstance{std::move(f), 1.0, UnitaryPairOps{u1, u2, Unitary(v)}, p, norm_mode};
}

RatioInstance seeded_hermitian(int m, int degree, std::uint64_t seed, SchattenExponent p, NormMode norm_mode,
                               bool two_sided) {
  if (m < 1 || degree < 0) throw DomainError("seeded_hermitian needs m >= 1 and degree >= 0");
  std::mt19937_64 rng(detail::splitmix64(seed ^ 0x4845524dULL ^ (static_cast<std::uint64_t>(m) << 32)));
  const Hermitian a1 = random_hermitian_contraction<double>(m, rng);
  const Hermitian a2 = project_contraction(a1.matrix() + 0.1 * random_direction(m, rng).matrix());
  const Hermitian b1 = random_hermitian_contraction<double>(m, rng);
  const Hermitian b2 = two_sided ? project_contraction(b1.matrix() + 0.1 * random_direction(m, rng).matrix()) : b1;
  TrigPoly f = random_poly(2, degree, rng);
  return RatioInstance{std::move(f), 1.0, HermitianPairOps{a1, a2, b1, b2}, p, norm_mode};
}

RatioInstance seeded_triple(int m, int degree, std::uint64_t seed, SchattenExponent p, NormMode norm_mode) {
  if (m < 1 || degree < 0) throw DomainError("seeded_triple needs m >= 1 and degree >= 0");
  std::mt19937_64 rng(detail::splitmix64(seed ^ 0x545249ULL ^ (static_cast<std::uint64_t>(m) << 32)));
  const Hermitian a = random_hermitian_contraction<double>(m, rng);
  const Hermitian b = random_hermitian_contraction<double>(m, rng);
  const Hermitian c1 = random_hermitian_contraction<double>(m, rng);
  const Hermitian c2 = project_contraction(c1.matrix() + 0.1 * random_direction(m, rng).matrix());
  TrigPoly f = random_poly(3, degree, rng);
  return RatioInstance{std::move(f), 1.0, TripleOps{a, b, c1, c2}, p, norm_mode};
}

// Witnesses --------------------------------------------------------------------------

namespace {

MatrixXcd primary_perturbation(const RatioInstance& inst) {
  return std::visit(overloaded{[](const HermitianPairOps& o) { return MatrixXcd(o.a1.matrix() - o.a2.matrix()); },
                               [](const UnitaryPairOps& o) { return MatrixXcd(o.u1.matrix() - o.u2.matrix()); },
                               [](const TripleOps& o) { return MatrixXcd(o.c1.matrix() - o.c2.matrix()); }},
                    inst.ops);
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

WitnessReport block_witness(const std::vector<RatioInstance>& blocks, const SchattenExponent& p) {
  if (p.is_infinite()) throw DomainError("block_witness needs a finite p");
  if (blocks.empty()) throw DomainError("block_witness needs at least one block");

  WitnessReport r;
  r.blocks = static_cast<int>(blocks.size());
  r.p = p;
  std::vector<MatrixXcd> d_ops, d_fs;
  double primary_sum = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    RatioInstance inst = blocks[i];
    inst.p = p;
    inst.validate();
    const MatrixXcd df = increment(inst);
    const double incr = schatten_norm(df, p);
    const double pert = perturbation_norm(inst);
    const double limit = std::ldexp(1.0, -k);
    if (!(incr > 1))
      throw DomainError("block " + std::to_string(k) + ": increment " + std::to_string(incr) + " is not > 1");
    if (!(pert < limit))
      throw DomainError("block " + std::to_string(k) + ": perturbation " + std::to_string(pert) + " is not < 2^-" +
                        std::to_string(k));
    r.increments.push_back(incr);
    r.perturbations.push_back(pert);
    r.function_norms.push_back(function_norm(inst));
    r.perturbation_sum += pth_power(pert, p);
    r.perturbation_bound += pth_power(limit, p);
    r.increment_sum += pth_power(incr, p);
    d_fs.push_back(df);
    d_ops.push_back(primary_perturbation(inst));
    primary_sum += pth_power(schatten_norm(d_ops.back(), p), p);
  }
  r.direct_sum_increment = pth_power(schatten_norm(direct_sum(d_fs), p), p);
  r.direct_sum_perturbation = pth_power(schatten_norm(direct_sum(d_ops), p), p);
  r.consistency = std::max(relative_gap(r.direct_sum_increment, r.increment_sum),
                           relative_gap(r.direct_sum_perturbation, primary_sum));
  r.perturbation_bounded = r.perturbation_sum < 1;
  r.increment_diverges = r.increment_sum >= r.blocks;
  return r;
}

std::vector<RatioInstance> build_witness_blocks(const RatioInstance& inst, int k_blocks, int n_subdivisions) {
  if (inst.mode() != OperatorMode::Hermitian) throw DomainError("witness blocks are built from Hermitian instances");
  if (k_blocks < 1) throw DomainError("witness needs at least one block");
  const double ratio = lipschitz_ratio(inst);
  if (!(ratio > 2)) throw DomainError("witness needs an instance with ratio > 2, got " + std::to_string(ratio));

  SubdivisionStep sel = subdivide_select(inst, n_subdivisions);
  RatioInstance step = std::move(sel.step);
  const double pert = perturbation_norm(step);
  step.f *= 1.0 / (2 * function_norm(step) * pert);

  std::vector<RatioInstance> blocks;
  const auto& o = std::get<HermitianPairOps>(step.ops);
  for (int k = 1; k <= k_blocks; ++k) {
    const double sigma = std::ldexp(pert, k + 1);
    RatioInstance b = step;
    b.dilation = step.dilation * sigma;
    b.ops = HermitianPairOps{Hermitian(o.a1.matrix() / sigma), Hermitian(o.a2.matrix() / sigma),
                             Hermitian(o.b1.matrix() / sigma), Hermitian(o.b2.matrix() / sigma)};
    b.contractions = false;
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::vector<RatioInstance> synthetic_witness_blocks(int k_blocks, const SchattenExponent& p, double delta) {
  if (k_blocks < 1) throw DomainError("witness needs at least one block");
  if (!(delta > 0)) throw DomainError("synthetic blocks need delta > 0");
  // f = (1 + delta) e^{i s x}: with s t = pi/3 the increment is exactly 1 + delta.
  std::vector<RatioInstance> blocks;
  for (int k = 1; k <= k_blocks; ++k) {
    const double t = std::ldexp(1.0, -(k + 1));
    VectorXd d(1);
    d << t;
    blocks.push_back(RatioInstance{TrigPoly::monomial(2, {1, 0, 0}, 1 + delta), kPi / 3 / t,
                                   HermitianPairOps{Hermitian::zero(1), Hermitian::diagonal(d), Hermitian::zero(1),
                                                    Hermitian::zero(1)},
                                   p, NormMode::Besov});
  }
  return blocks;
}

}  // namespace opfunc
