#include <cmath>
#include <random>

#include "doctest.h"
#include "opfunc/extremal.hpp"

using namespace opfunc;

namespace {

const SchattenExponent kPs[] = {SchattenExponent(1), SchattenExponent(2), SchattenExponent(4),
                                SchattenExponent::infinity()};

MatrixXcd power(const MatrixXcd& m, int k) {
  MatrixXcd r = MatrixXcd::Identity(m.rows(), m.cols());
  const MatrixXcd base = k >= 0 ? m : MatrixXcd(m.adjoint());
  for (int i = 0; i < std::abs(k); ++i) r = r * base;
  return r;
}

// f(U, V) straight from the coefficient sum.
MatrixXcd direct_unitary(const TrigPoly& f, const MatrixXcd& u, const MatrixXcd& v) {
  MatrixXcd r = MatrixXcd::Zero(u.rows(), u.cols());
  for (const auto& [j, c] : f.coefficients()) r += c * power(u, j[0]) * power(v, j[1]);
  return r;
}

std::optional<int> kappa_brute(const SupportMask& mask, int m, int n_max) {
  for (int n = 1; n <= n_max; ++n)
    for (int n1 = -n; n1 <= n - m; ++n1)
      for (int n2 = -n; n2 <= n - m; ++n2) {
        bool ok = true;
        for (int a = n1; a <= n1 + m && ok; ++a)
          for (int b = n2; b <= n2 + m && ok; ++b) ok = mask.contains(a, b);
        if (ok) return n;
      }
  return std::nullopt;
}

RatioInstance conjugated(const RatioInstance& inst, const MatrixXcd& w) {
  RatioInstance out = inst;
  auto h = [&](const Hermitian& x) { return Hermitian(w * x.matrix() * w.adjoint()); };
  auto u = [&](const Unitary& x) { return Unitary(w * x.matrix() * w.adjoint()); };
  if (const auto* o = std::get_if<HermitianPairOps>(&inst.ops))
    out.ops = HermitianPairOps{h(o->a1), h(o->a2), h(o->b1), h(o->b2)};
  else if (const auto* o = std::get_if<UnitaryPairOps>(&inst.ops))
    out.ops = UnitaryPairOps{u(o->u1), u(o->u2), u(o->v)};
  else {
    const auto& t = std::get<TripleOps>(inst.ops);
    out.ops = TripleOps{h(t.a), h(t.b), h(t.c1), h(t.c2)};
  }
  return out;
}

}  // namespace

TEST_CASE("increment_norm") {
  const Hermitian a = random_hermitian_contraction(4, 1), b = random_hermitian_contraction(4, 2);
  const RatioInstance same{TrigPoly::monomial(2, {2, 1, 0}), 1.0, HermitianPairOps{a, a, b, b}};
  CHECK(increment_norm(same) == 0.0);

  const Unitary u1 = haar_unitary(5, 3), u2 = haar_unitary(5, 4), v = haar_unitary(5, 5);
  for (const auto& p : kPs) {
    const RatioInstance lin{TrigPoly::monomial(2, {1, 0, 0}), 1.0, UnitaryPairOps{u1, u2, v}, p};
    CHECK(increment_norm(lin) == doctest::Approx(schatten_norm(MatrixXcd(u1.matrix() - u2.matrix()), p)).epsilon(1e-9));
  }

  // Perturbed XOR-like instance against the funcalc evaluation.
  MatrixXcd bm(2, 2);
  bm << 0.5, 0.5, 0.5, 0.5;
  const Hermitian a1 = Hermitian::diagonal(VectorXd::LinSpaced(2, 0, 1));
  VectorXd shifted(2);
  shifted << 0.1, 0.8;
  const Hermitian a2 = Hermitian::diagonal(shifted), bx(bm);
  TrigPoly f(2);
  f.set({1, 0, 0}, 0.5);
  f.set({0, 1, 0}, -0.5);
  f.set({1, -1, 0}, cd(0, 1));
  const RatioInstance inst{f, 1.0, HermitianPairOps{a1, a2, bx, bx}, SchattenExponent(2)};
  const DilatedTrigPoly g{f, 1.0};
  const MatrixXcd expected = eval_pair_spectral(g, a1, bx) - eval_pair_spectral(g, a2, bx);
  CHECK(increment_norm(inst) == doctest::Approx(schatten_norm(expected, SchattenExponent(2))).epsilon(1e-12));
}

TEST_CASE("lipschitz_ratio") {
  const Unitary u1 = haar_unitary(4, 7), u2 = haar_unitary(4, 8), v = haar_unitary(4, 9);
  for (const auto& p : kPs) {
    const RatioInstance sup{TrigPoly::monomial(2, {1, 0, 0}), 1.0, UnitaryPairOps{u1, u2, v}, p, NormMode::Sup};
    CHECK(lipschitz_ratio(sup) == doctest::Approx(1).epsilon(1e-9));
    RatioInstance besov = sup;
    besov.norm_mode = NormMode::Besov;
    CHECK(lipschitz_ratio(besov) == doctest::Approx(1).epsilon(1e-9));
  }
  const RatioInstance zero{TrigPoly::monomial(2, {1, 0, 0}), 1.0, UnitaryPairOps{u1, u1, v}};
  CHECK_THROWS_AS(lipschitz_ratio(zero), DomainError);
  const RatioInstance flat{TrigPoly(2), 1.0, UnitaryPairOps{u1, u2, v}};
  CHECK_THROWS_AS(lipschitz_ratio(flat), DomainError);

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double r = lipschitz_ratio(seeded_hermitian(4, 3, seed, SchattenExponent(2)));
    CHECK(std::isfinite(r));
    CHECK(r >= 0);
  }
}

TEST_CASE("validate") {
  const Hermitian big = Hermitian::diagonal(VectorXd::Constant(2, 1.5)), z = Hermitian::zero(2);
  RatioInstance inst{TrigPoly::monomial(2, {1, 0, 0}), 1.0, HermitianPairOps{big, z, z, z}};
  CHECK_THROWS_AS(inst.validate(), DomainError);
  inst.contractions = false;
  CHECK_NOTHROW(inst.validate());
  const RatioInstance wrong_dim{TrigPoly::monomial(3, {1, 0, 0}), 1.0, HermitianPairOps{z, z, z, z}};
  CHECK_THROWS_AS(wrong_dim.validate(), DomainError);
  const RatioInstance mixed{TrigPoly::monomial(2, {1, 0, 0}), 1.0, HermitianPairOps{z, Hermitian::zero(3), z, z}};
  CHECK_THROWS_AS(mixed.validate(), DomainError);
}

TEST_CASE("subdivide_select") {
  const RatioInstance inst = seeded_hermitian(5, 4, 11, SchattenExponent(4));
  const auto one = subdivide_select(inst, 1);
  CHECK(one.j == 0);
  CHECK(one.ratio == lipschitz_ratio(inst));
  CHECK(std::get<HermitianPairOps>(one.step.ops).a2.matrix() == std::get<HermitianPairOps>(inst.ops).a2.matrix());
  CHECK_THROWS_AS(subdivide_select(inst, 0), DomainError);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (const auto& p : kPs) {
      const RatioInstance h = seeded_hermitian(4, 3, seed, p, NormMode::Besov, seed % 2 == 0);
      const auto sel = subdivide_select(h, 4);
      CHECK(sel.ratio >= lipschitz_ratio(h) - 1e-10);
      CHECK(perturbation_norm(sel.step) == doctest::Approx(perturbation_norm(h) / 4).epsilon(1e-12));
      CHECK(sel.ratio == doctest::Approx(lipschitz_ratio(sel.step)).epsilon(1e-12));
    }
    const RatioInstance t = seeded_triple(3, 2, seed, SchattenExponent(2));
    CHECK(subdivide_select(t, 4).ratio >= lipschitz_ratio(t) - 1e-10);
  }

  // Near-linear f (tiny dilation): every step has the overall ratio.
  RatioInstance lin = seeded_hermitian(4, 0, 3);
  lin.f = TrigPoly::monomial(2, {1, 0, 0});
  lin.dilation = 1e-7;
  CHECK(subdivide_select(lin, 5).ratio == doctest::Approx(lipschitz_ratio(lin)).epsilon(1e-5));

  CHECK_THROWS_AS(subdivide_select(seeded_family(2, FamilyKind::Triangular), 2), DomainError);
}

TEST_CASE("unitary_path") {
  const Unitary u = haar_unitary(4, 1);
  for (const auto& w : unitary_path(u, u, 3)) CHECK((w.matrix() - u.matrix()).cwiseAbs().maxCoeff() <= 1e-12);

  MatrixXcd minus_one(1, 1);
  minus_one << -1.0;
  const auto scalar = unitary_path(Unitary::identity(1), Unitary(minus_one), 4);
  REQUIRE(scalar.size() == 5);
  for (int k = 0; k <= 4; ++k) CHECK(std::abs(scalar[k].matrix()(0, 0) - std::polar(1.0, kPi * k / 4)) <= 1e-12);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Unitary u1 = haar_unitary(6, seed), u2 = haar_unitary(6, 100 + seed);
    const auto path = unitary_path(u1, u2, 8);
    CHECK(path.front().matrix() == u1.matrix());
    CHECK((path.back().matrix() - u2.matrix()).cwiseAbs().maxCoeff() <= 1e-8);
    for (const auto& p : kPs) {
      const double bound = kPi / (2 * 8) * schatten_norm(MatrixXcd(u1.matrix() - u2.matrix()), p) * (1 + 1e-10);
      for (int k = 1; k <= 8; ++k)
        CHECK(schatten_norm(MatrixXcd(path[k].matrix() - path[k - 1].matrix()), p) <= bound);
    }
  }
  CHECK_THROWS_AS(unitary_path(u, u, 0), DomainError);
}

TEST_CASE("kappa_lambda examples") {
  for (int m = 1; m <= 9; ++m) {
    CHECK(kappa_lambda(SupportMask::full(), m, 50) == (m + 1) / 2);
    CHECK(kappa_lambda(SupportMask::quadrant(), m, 50) == m);
  }
  CHECK_FALSE(kappa_lambda(SupportMask::finite({{0, 0}, {1, 0}, {0, 1}}), 1, 30).has_value());
  CHECK(kappa_lambda(SupportMask::finite({{0, 0}, {1, 0}, {0, 1}, {1, 1}}), 1, 30) == 1);
  CHECK_FALSE(kappa_lambda(SupportMask::quadrant(), 6, 5).has_value());
  CHECK_THROWS_AS(kappa_lambda(SupportMask::full(), 0, 5), DomainError);
}

TEST_CASE("kappa_lambda matches brute force on random masks") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const double density = 0.55 + 0.45 * u(rng);
    std::set<std::pair<int, int>> pts;
    for (int a = -12; a <= 12; ++a)
      for (int b = -12; b <= 12; ++b)
        if (u(rng) < density) pts.insert({a, b});
    const auto mask = SupportMask::finite(pts);
    for (int m = 1; m <= 8; ++m) CHECK(kappa_lambda(mask, m, 14) == kappa_brute(mask, m, 14));
  }
}

TEST_CASE("find_square") {
  const auto corner = find_square(SupportMask::quadrant(), 6, 20);
  REQUIRE(corner.has_value());
  CHECK(*corner == std::make_pair(0, 0));
  CHECK(find_square(SupportMask::full(), 4, 10) == std::make_pair(-2, -2));
  CHECK_FALSE(find_square(SupportMask::finite({{0, 0}}), 1, 5).has_value());
}

TEST_CASE("seeded_family structure") {
  for (int m = 2; m <= 6; ++m)
    for (auto kind : {FamilyKind::Random, FamilyKind::Triangular, FamilyKind::Optimized}) {
      const RatioInstance inst = seeded_family(m, kind, SchattenExponent(3), NormMode::Besov, 5);
      CHECK_NOTHROW(inst.validate());
      CHECK(inst.f.is_analytic());
      CHECK(inst.f.upper()[0] <= 4 * m - 2);
      CHECK(inst.f.upper()[1] <= 4 * m - 2);
      for (const auto& p : kPs)
        CHECK(perturbation_norm(RatioInstance{inst.f, 1.0, inst.ops, p}) ==
              doctest::Approx(std::abs(std::polar(1.0, kPi / m) - 1.0) *
                              (p.is_infinite() ? 1.0 : std::pow(m, 1 / p.value())))
                  .epsilon(1e-12));
    }

  const RatioInstance opt = seeded_family(4, FamilyKind::Optimized);
  const auto& o = std::get<UnitaryPairOps>(opt.ops);
  CHECK(direct_unitary(opt.f, o.u2.matrix(), o.v.matrix()).cwiseAbs().maxCoeff() <= 1e-10);

  const RatioInstance a = seeded_family(3, FamilyKind::Random, SchattenExponent(2), NormMode::Besov, 9);
  const RatioInstance b = seeded_family(3, FamilyKind::Random, SchattenExponent(2), NormMode::Besov, 9);
  CHECK(a.f.coefficients() == b.f.coefficients());
  CHECK_THROWS_AS(seeded_family(1, FamilyKind::Triangular), DomainError);
}

TEST_CASE("seeded_family at m = 2 matches a direct evaluation") {
  const RatioInstance inst = seeded_family(2, FamilyKind::Triangular, SchattenExponent(4), NormMode::Besov);
  const auto& o = std::get<UnitaryPairOps>(inst.ops);
  MatrixXcd shift(2, 2), v(2, 2);
  shift << 0, 1, 1, 0;
  v << 1, 0, 0, -1;
  CHECK((o.u2.matrix() - shift).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((o.v.matrix() - v).cwiseAbs().maxCoeff() <= 1e-15);
  for (int j = 0; j <= 6; ++j)
    for (int k = 0; k <= 6; ++k) CHECK(inst.f.coeff({j, k, 0}) == cd(1.0 / (j - k + 0.5)));
  const MatrixXcd u1 = cd(0, 1) * shift;
  const MatrixXcd inc = direct_unitary(inst.f, u1, v) - direct_unitary(inst.f, shift, v);
  const double expected = schatten_norm(inc, SchattenExponent(4)) /
                          (besov_norm(inst.f, 1) * schatten_norm(MatrixXcd(u1 - shift), SchattenExponent(4)));
  CHECK(lipschitz_ratio(inst) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("seeded_family honours a support mask") {
  const auto sector = SupportMask::sector(-kPi, -kPi / 2);  // third quadrant
  const RatioInstance inst = seeded_family(2, FamilyKind::Optimized, SchattenExponent(2), NormMode::Besov, 0, sector);
  for (const auto& [j, c] : inst.f.coefficients()) CHECK(sector.contains(j[0], j[1]));
  const RatioInstance plain = seeded_family(2, FamilyKind::Optimized);
  CHECK(increment_norm(inst) == doctest::Approx(increment_norm(plain)).epsilon(1e-9));

  const auto sparse = SupportMask::finite({{0, 0}, {1, 2}, {3, 3}});
  const RatioInstance cut = seeded_family(2, FamilyKind::Triangular, SchattenExponent(2), NormMode::Besov, 0, sparse);
  CHECK(cut.f.size() == 3);
  CHECK_THROWS_AS(seeded_family(2, FamilyKind::Triangular, SchattenExponent(2), NormMode::Besov, 0,
                                SupportMask::finite({{-5, -5}})),
                  DomainError);
}

TEST_CASE("ratio invariances") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SchattenExponent p = kPs[seed % 4];
    const MatrixXcd w4 = haar_unitary(4, 1000 + seed).matrix();
    const RatioInstance h = seeded_hermitian(4, 3, seed, p);
    CHECK(lipschitz_ratio(conjugated(h, w4)) == doctest::Approx(lipschitz_ratio(h)).epsilon(1e-9));
    const RatioInstance t = seeded_triple(4, 2, seed, p);
    CHECK(lipschitz_ratio(conjugated(t, w4)) == doctest::Approx(lipschitz_ratio(t)).epsilon(1e-9));
    const RatioInstance u = seeded_family(4, FamilyKind::Random, p, NormMode::Sup, seed);
    CHECK(lipschitz_ratio(conjugated(u, w4)) == doctest::Approx(lipschitz_ratio(u)).epsilon(1e-9));

    // Scaling: A -> A / sigma with f dilated by sigma.
    const auto& o = std::get<HermitianPairOps>(h.ops);
    const double sigma = 0.5 + static_cast<double>(seed);
    const ScaledPair s = scale_pair(h.f, o.a1, o.b1, sigma);
    RatioInstance scaled = h;
    scaled.dilation = s.f.dilation;
    scaled.contractions = false;
    scaled.ops = HermitianPairOps{s.a, Hermitian(o.a2.matrix() / sigma), s.b, s.b};
    CHECK(lipschitz_ratio(scaled) == doctest::Approx(lipschitz_ratio(h)).epsilon(1e-9));

    // Modulation of a polynomial vanishing at (U2, V).
    // Sup norms are shift invariant, Besov norms are not.
    RatioInstance opt = seeded_family(3, FamilyKind::Optimized, p, NormMode::Sup);
    const double before = lipschitz_ratio(opt);
    const int n1 = static_cast<int>(seed % 5) - 2, n2 = static_cast<int>(seed % 3) - 1;
    opt.f = modulate(opt.f, n1, n2);
    CHECK(lipschitz_ratio(opt) == doctest::Approx(before).epsilon(1e-9));
  }
}

TEST_CASE("block_witness") {
  const auto one = synthetic_witness_blocks(1, SchattenExponent(2));
  const WitnessReport r1 = block_witness(one, SchattenExponent(2));
  CHECK(r1.blocks == 1);
  CHECK(r1.perturbation_sum == doctest::Approx(r1.perturbations[0] * r1.perturbations[0]).epsilon(1e-14));
  CHECK(r1.increment_sum == doctest::Approx(r1.increments[0] * r1.increments[0]).epsilon(1e-14));

  for (double p : {1.0, 2.0, 3.0}) {
    const SchattenExponent sp(p);
    const WitnessReport r = block_witness(synthetic_witness_blocks(8, sp, 0.01), sp);
    CHECK(r.blocks == 8);
    for (int k = 0; k < 8; ++k) {
      CHECK(r.increments[k] == doctest::Approx(1.01).epsilon(1e-12));
      CHECK(r.perturbations[k] == doctest::Approx(std::ldexp(1.0, -(k + 2))).epsilon(1e-14));
    }
    CHECK(r.perturbation_sum < 1);
    CHECK(r.increment_sum >= 8);
    CHECK(r.perturbation_bounded);
    CHECK(r.increment_diverges);
    CHECK(r.consistency <= 1e-10);
  }

  auto bad = synthetic_witness_blocks(3, SchattenExponent(2));
  bad[2] = bad[0];  // perturbation 1/4 is not < 1/8
  try {
    block_witness(bad, SchattenExponent(2));
    FAIL("expected rejection");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("block 3") != std::string::npos);
  }
  CHECK_THROWS_AS(block_witness(one, SchattenExponent::infinity()), DomainError);
  CHECK_THROWS_AS(block_witness({}, SchattenExponent(2)), DomainError);
}

TEST_CASE("witness blocks from an instance with ratio > 2") {
  // Sup normalization makes a high-frequency monomial steep.
  RatioInstance inst = seeded_hermitian(3, 0, 4, SchattenExponent(3), NormMode::Sup);
  inst.f = TrigPoly::monomial(2, {6, 1, 0});
  REQUIRE(lipschitz_ratio(inst) > 2);
  const auto blocks = build_witness_blocks(inst, 8);
  REQUIRE(blocks.size() == 8);
  const WitnessReport r = block_witness(blocks, SchattenExponent(3));
  for (int k = 0; k < 8; ++k) {
    CHECK(r.increments[k] > 1);
    CHECK(r.perturbations[k] == doctest::Approx(std::ldexp(1.0, -(k + 2))).epsilon(1e-9));
  }
  CHECK(r.perturbation_sum < 1);
  CHECK(r.increment_sum >= 8);
  CHECK(r.consistency <= 1e-10);

  RatioInstance flat = inst;
  flat.f = TrigPoly::monomial(2, {1, 0, 0});
  flat.norm_mode = NormMode::Besov;
  CHECK_THROWS_AS(build_witness_blocks(flat, 8), DomainError);
}
