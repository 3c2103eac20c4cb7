#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "opfunc/besov.hpp"

using namespace opfunc;

namespace {

TrigPoly random_poly(int dim, int degree, std::uint64_t seed, double density = 0.6) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0, 1);
  TrigPoly f(dim);
  const int hi1 = degree, hi2 = dim >= 2 ? degree : 0, hi3 = dim >= 3 ? degree : 0;
  for (int a = -hi1; a <= hi1; ++a)
    for (int b = -hi2; b <= hi2; ++b)
      for (int c = -hi3; c <= hi3; ++c)
        if (u(rng) < density) f.set({a, b, c}, cd(g(rng), g(rng)));
  return f;
}

}  // namespace

TEST_CASE("window function identities") {
  const auto w = make_window();
  CHECK(w(0.5) == 0.0);
  CHECK(w(2.0) == 0.0);
  CHECK(w(1.0) + w(2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w(1.3) + w(0.65) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w(0.3) == 0.0);
  CHECK(w(3.0) == 0.0);

  for (int i = 0; i <= 10000; ++i) {
    const double t = 1.0 + i / 10000.0;
    CHECK(std::abs(w(t) - (1 - w(t / 2))) <= 1e-12);
    CHECK(w(t) >= 0.0);
    CHECK(w(t) <= 1.0);
  }
}

TEST_CASE("window partition of unity on [1e-3, 1e3]") {
  const auto w = make_window();
  double worst = 0;
  for (int i = 0; i <= 20000; ++i) {
    const double t = std::pow(10.0, -3 + 6.0 * i / 20000);
    double sum = 0;
    for (int n = -20; n <= 20; ++n) sum += w(std::ldexp(t, -n));
    worst = std::max(worst, std::abs(sum - 1));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("lp_decompose examples") {
  const auto c = lp_decompose(TrigPoly::constant(2, cd(2, -1)));
  REQUIRE(c.pieces.size() == 1);
  CHECK(c.pieces[0].n == 0);
  CHECK(c.pieces[0].f.coeff({0, 0, 0}) == cd(2, -1));

  const auto w = make_window();
  const auto z3 = lp_decompose(TrigPoly::monomial(2, {3, 0, 0}));
  REQUIRE(z3.pieces.size() == 2);
  CHECK(z3.pieces[0].n == 1);
  CHECK(z3.pieces[1].n == 2);
  CHECK(z3.pieces[0].f.coeff({3, 0, 0}).real() == doctest::Approx(w(1.5)).epsilon(1e-15));
  CHECK(z3.pieces[1].f.coeff({3, 0, 0}).real() == doctest::Approx(w(0.75)).epsilon(1e-15));
  CHECK(w(1.5) + w(0.75) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("lp_decompose pieces are frequency localized and reconstruct f") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int dim = 1 + static_cast<int>(seed % 3);
    const TrigPoly f = random_poly(dim, dim == 3 ? 6 : 16, seed);
    const auto lp = lp_decompose(f);
    const TrigPoly back = lp.sum();
    double worst = 0;
    for (const auto& [j, c] : f.coefficients()) worst = std::max(worst, std::abs(back.coeff(j) - c));
    for (const auto& [j, c] : back.coefficients()) worst = std::max(worst, std::abs(f.coeff(j) - c));
    CHECK(worst <= 1e-12);
    for (const auto& piece : lp.pieces)
      for (const auto& [j, c] : piece.f.coefficients()) {
        const double r = std::sqrt(double(j[0]) * j[0] + double(j[1]) * j[1] + double(j[2]) * j[2]);
        if (piece.n == 0)
          CHECK(r < 2.0);
        else {
          CHECK(r > std::ldexp(1.0, piece.n - 1));
          CHECK(r < std::ldexp(1.0, piece.n + 1));
        }
      }
  }
}

TEST_CASE("besov_norm examples") {
  CHECK(besov_norm(TrigPoly::constant(2, cd(3, 4)), 1) == doctest::Approx(5).epsilon(1e-14));
  CHECK(besov_norm(TrigPoly::monomial(2, {1, 0, 0}), 1) == doctest::Approx(1).epsilon(1e-14));
  const auto w = make_window();
  CHECK(besov_norm(TrigPoly::monomial(2, {3, 0, 0}), 1) ==
        doctest::Approx(2 * w(1.5) + 4 * w(0.75)).epsilon(1e-14));
  CHECK(besov_norm(TrigPoly::monomial(2, {3, 0, 0}), 2) ==
        doctest::Approx(4 * w(1.5) + 16 * w(0.75)).epsilon(1e-14));
  CHECK_THROWS_AS(besov_norm(TrigPoly(2), 3), DomainError);
}

TEST_CASE("fourier_l1 and tensor_norm_bound examples") {
  CHECK(fourier_l1(TrigPoly::monomial(2, {1, 1, 0})) == 1.0);
  TrigPoly box(2);
  for (int j = 0; j <= 3; ++j)
    for (int k = 0; k <= 3; ++k) box.set({j, k, 0}, 1.0);
  CHECK(fourier_l1(box) == 16.0);

  CHECK(tensor_norm_bound(TrigPoly::constant(2, -2.0)) == doctest::Approx(10).epsilon(1e-15));
  CHECK(tensor_norm_bound(TrigPoly(2)) == 0.0);
  CHECK_THROWS_AS(tensor_norm_bound(TrigPoly(3)), DomainError);
}

TEST_CASE("l1 <= 5 besov on random polynomials") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const TrigPoly f = random_poly(2, 1 + static_cast<int>(seed % 12), seed, 0.3 + 0.007 * seed);
    CHECK(fourier_l1(f) <= kL1BesovConstant * besov_norm(f, 1));
  }
}

TEST_CASE("besov seminorm properties") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const TrigPoly f = random_poly(2, 6, seed), g = random_poly(2, 6, seed + 100);
    const double bf = besov_norm(f, 1), bg = besov_norm(g, 1);
    const cd alpha(-1.7, 0.4);
    CHECK(besov_norm(alpha * f, 1) == doctest::Approx(std::abs(alpha) * bf).epsilon(1e-10));
    CHECK(besov_norm(f + g, 1) <= (bf + bg) * (1 + 1e-10));
    const cd c(0.3, -2.0);
    CHECK(besov_norm(f + TrigPoly::constant(2, c), 1) <= (bf + std::abs(c)) * (1 + 1e-10));
  }
}

TEST_CASE("fourier_l1 is invariant under index shifts") {
  const TrigPoly f = random_poly(2, 5, 77);
  TrigPoly shifted(2);
  for (const auto& [j, c] : f.coefficients()) shifted.set({j[0] + 4, j[1] - 9, 0}, c);
  CHECK(fourier_l1(shifted) == fourier_l1(f));
}

TEST_CASE("analytic_restrict") {
  TrigPoly f(2);
  f.set({1, -1, 0}, 1.0);
  f.set({1, 1, 0}, 1.0);
  const TrigPoly g = analytic_restrict(f);
  CHECK(g.size() == 1);
  CHECK(g.coeff({1, 1, 0}) == 1.0);
  CHECK(g.is_analytic());
  CHECK(analytic_restrict(g).coefficients() == g.coefficients());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TrigPoly r = analytic_restrict(random_poly(2 + static_cast<int>(seed % 2), 4, seed));
    for (const auto& [j, c] : r.coefficients()) CHECK(std::min({j[0], j[1], j[2]}) >= 0);
  }
  CHECK_THROWS_AS(analytic_restrict(TrigPoly(1)), DomainError);
}

TEST_CASE("grid evaluation matches direct evaluation") {
  for (int dim = 1; dim <= 3; ++dim) {
    const TrigPoly f = random_poly(dim, 3, 10 + static_cast<std::uint64_t>(dim));
    const MultiIndex grid{7, dim >= 2 ? 5 : 1, dim >= 3 ? 4 : 1};
    const VectorXcd v = grid_values(f, grid);
    Index at = 0;
    double worst = 0;
    for (int a = 0; a < grid[0]; ++a)
      for (int b = 0; b < grid[1]; ++b)
        for (int c = 0; c < grid[2]; ++c)
          worst = std::max(worst, std::abs(v(at++) - f.evaluate(2 * kPi * a / grid[0], 2 * kPi * b / grid[1],
                                                                2 * kPi * c / grid[2])));
    CHECK(worst <= 1e-12);
  }
  const TrigPoly f = random_poly(2, 4, 5);
  const VectorXd x = VectorXd::LinSpaced(3, -1, 2), y = VectorXd::LinSpaced(4, 0.1, 0.7);
  const MatrixXcd prod = evaluate_on_product(f, x, y);
  for (Index a = 0; a < 3; ++a)
    for (Index b = 0; b < 4; ++b) CHECK(std::abs(prod(a, b) - f.evaluate(x(a), y(b))) <= 1e-12);
}

TEST_CASE("TrigPoly invariants") {
  TrigPoly f(2);
  f.set({2, 1, 0}, cd(1, 2));
  f.set({-2, -1, 0}, cd(1, -2));
  CHECK(f.is_real_valued());
  f.set({0, 3, 0}, 1.0);
  CHECK_FALSE(f.is_real_valued());
  CHECK(f.degree() == 3);
  CHECK_THROWS_AS(f.set({1, 1, 1}, 1.0), DomainError);

  TrigPoly g(2);
  g.set_support_mask(SupportMask::quadrant());
  g.set({1, 2, 0}, 1.0);
  CHECK_THROWS_AS(g.set({-1, 2, 0}, 1.0), DomainError);
  CHECK_THROWS_AS(f.set_support_mask(SupportMask::quadrant()), DomainError);
  g.set({3, 3, 0}, 0.0);
  CHECK(g.size() == 1);
}

TEST_CASE("polynomial exchange format") {
  for (int dim = 1; dim <= 3; ++dim) {
    const TrigPoly f = random_poly(dim, 3, 40 + static_cast<std::uint64_t>(dim));
    std::stringstream ss;
    write_trig_poly(ss, f);
    const TrigPoly g = read_trig_poly(ss);
    CHECK(g.dim() == dim);
    CHECK(g.coefficients() == f.coefficients());
  }
  for (const char* text : {"", "d 4 degree 1\n", "d 2 degree 1\n2 0 1 0\n", "d 2 degree 1\n0 0 1\n",
                           "d 2 degree 1\n0 0 1 0\n0 0 2 0\n", "d 1 degree 2\n1 x 0\n"}) {
    std::istringstream in(text);
    CHECK_THROWS_AS(read_trig_poly(in), ParseError);
  }
}

TEST_CASE("NormTracker follows coefficient updates") {
  TrigPoly f(2);
  f.set({0, 0, 0}, 1.0);
  f.set({6, 6, 0}, 0.5);
  f.set({3, 1, 0}, cd(0.2, 0.1));
  NormTracker tracker(f, {0, 0, 0}, {6, 6, 0});
  CHECK(tracker.besov() == doctest::Approx(besov_norm(f, 1)).epsilon(1e-12));
  CHECK(tracker.sup() == doctest::Approx(sup_norm(f)).epsilon(1e-12));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> idx(0, 6);
  std::normal_distribution<double> g;
  for (int step = 0; step < 20; ++step) {
    const MultiIndex j{idx(rng), idx(rng), 0};
    const cd delta(g(rng), g(rng));
    tracker.add(j, delta);
    f.add(j, delta);
  }
  CHECK(tracker.besov() == doctest::Approx(besov_norm(f, 1)).epsilon(1e-10));
  CHECK(tracker.sup() == doctest::Approx(sup_norm(f)).epsilon(1e-10));
  CHECK(tracker.poly().coefficients().size() == f.coefficients().size());
}
