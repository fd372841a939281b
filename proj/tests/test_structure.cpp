#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "pcfield/errors.hpp"
#include "pcfield/spectra.hpp"
#include "pcfield/structure.hpp"

using namespace pcf;
using fixtures::grid;

namespace {

constexpr double kPi = std::numbers::pi;

// 9×9 window along the basis (4,3), (1,1): the (12,9) shift moves it by 3 rows.
Window weak_window() {
  IntMatrix basis(2, 2);
  basis << 4, 3, 1, 1;
  return Window::lattice_box({0, 0}, {8, 8}, basis);
}

double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

void check_report(const DecompositionReport& r) {
  CHECK(r.gram_error <= 1e-10);
  CHECK(r.shift_agreement <= 1e-8);
  CHECK(r.periodicity <= 1e-8);
  CHECK(r.roundtrip <= 1e-8);
  CHECK(r.unitarity <= 1e-10);
  CHECK(r.commutator <= 1e-8);
}

}  // namespace

TEST_CASE("embedding") {
  SUBCASE("white kernel gives orthogonal rows") {
    KernelFn white = [](const Point& t, const Point& s) { return t == s ? Complex(1.0 + static_cast<double>(t[0] * t[0]), 0) : Complex(0); };
    Window w = Window::box({-3}, {3});
    auto e = embed(white, w);
    CHECK(e.rank() == 7);
    for (std::size_t a = 0; a < w.size(); ++a) {
      CHECK(std::abs(e.at(a).norm() - std::sqrt(1.0 + static_cast<double>(w[a][0] * w[a][0]))) <= 1e-12);
      for (std::size_t b = a + 1; b < w.size(); ++b) CHECK(std::abs(inner(e.at(a), e.at(b))) <= 1e-12);
    }
  }
  SUBCASE("rank-one kernel") {
    auto g = [](const Point& t) { return std::polar(1.0 + 0.1 * static_cast<double>(t[0]), 0.3 * static_cast<double>(t[1])); };
    KernelFn k = [g](const Point& t, const Point& s) { return g(t) * std::conj(g(s)); };
    auto e = embed(k, Window::box({0, 0}, {3, 3}));
    CHECK(e.rank() == 1);
    CHECK(e.gram_error <= 1e-12 * e.scale);
  }
  SUBCASE("model kernels are reproduced") {
    for (const auto& m : {fixtures::stationary_z2(), fixtures::strong_pc(), fixtures::weak_pc()}) {
      auto e = embed(m.kernel_fn(), Window::box({-3, -3}, {4, 4}));
      CHECK(e.rank() <= m.dim());
      CHECK(e.gram_error <= 1e-10 * e.scale);
    }
  }
  SUBCASE("indefinite kernels are rejected") {
    KernelFn bad = [](const Point& t, const Point& s) { return Complex(t == s ? 1.0 : -0.9, 0); };
    CHECK_THROWS_AS(embed(bad, Window::box({0}, {3})), NumericalError);
    KernelFn skew = [](const Point& t, const Point& s) { return Complex(0, t[0] < s[0] ? 0.5 : (t == s ? 1 : 0)); };
    CHECK_THROWS_AS(embed(skew, Window::box({0}, {3})), NumericalError);
  }
}

TEST_CASE("K-shift") {
  SUBCASE("stationary sequence, K = Z") {
    auto m = fixtures::unit_stationary_z();
    Window w = Window::box({0}, {7});
    auto e = embed(m.kernel_fn(), w);
    auto sys = k_shift(e, LatticeSubgroup::parse("1"));
    REQUIRE(sys.ops.size() == 1);
    for (std::size_t a = 0; a + 1 < w.size(); ++a) CHECK((sys.ops[0] * e.at(a) - e.at(a + 1)).norm() <= 1e-8);
    CHECK(sys.unitarity <= 1e-10);
    auto u = lift_and_extend(sys, LatticeSubgroup::parse("1"));
    CHECK(shift_agreement(u, sys) <= 1e-8);
  }
  SUBCASE("completion when the overlap does not span") {
    // White noise: each shift leaves one direction undetermined.
    KernelFn white = [](const Point& t, const Point& s) { return Complex(t == s ? 1.0 : 0.0, 0); };
    Window w = Window::box({0}, {4});
    auto sys = k_shift(embed(white, w), LatticeSubgroup::parse("1"));
    CHECK(sys.unitarity <= 1e-10);
    CHECK(sys.overlap_residual <= 1e-10);
  }
  SUBCASE("two-periodic model: V agrees with U^2 on the span") {
    auto m = fixtures::two_pc();
    Window w = Window::box({0}, {8});
    auto e = embed(m.kernel_fn(), w);
    auto sys = k_shift(e, m.subgroup());
    for (std::size_t a = 0; a < w.size(); ++a)
      for (std::size_t b = 0; b < w.size(); ++b) {
        Complex got = inner(sys.ops[0] * e.at(a), e.at(b));
        Complex truth = inner(m.unitary().apply({2}, m.eval(w[a])), m.eval(w[b]));
        CHECK(std::abs(got - truth) <= 1e-9 * e.scale);
      }
  }
  SUBCASE("kernel that is not PC is rejected") {
    KernelFn bad = [](const Point& t, const Point& s) {
      double ft = 1.0 + 0.1 * static_cast<double>(t[0]), fs = 1.0 + 0.1 * static_cast<double>(s[0]);
      return Complex(ft * fs * std::pow(0.5, static_cast<double>(std::abs(t[0] - s[0]))), 0);
    };
    CHECK_THROWS_AS(k_shift(embed(bad, Window::box({0}, {8})), LatticeSubgroup::parse("2")), NumericalError);
  }
  SUBCASE("insufficient overlap is rejected") {
    auto m = fixtures::strong_pc();
    CHECK_THROWS_AS(k_shift(embed(m.kernel_fn(), Window::box({0, 0}, {1, 4})), m.subgroup()), ContractError);
  }
}

TEST_CASE("lifting") {
  SUBCASE("K = 2Z: chi = theta/2 and U^2 = V") {
    auto m = fixtures::two_pc();
    auto e = embed(m.kernel_fn(), Window::box({0}, {8}));
    auto sys = k_shift(e, m.subgroup());
    auto u = lift_and_extend(sys, m.subgroup());
    for (std::size_t j = 0; j < sys.spaces.size(); ++j) {
      double chi = u.atoms()[j].freq[0];
      CHECK(chi < kPi);
      CHECK(angular_distance(2 * chi, sys.spaces[j].phases[0]) <= 1e-12);
    }
    CHECK(max_abs_diff(u.power({1}) * u.power({1}), sys.ops[0]) <= 1e-8);
  }
}

TEST_CASE("lifting a stationary field returns the joint shift") {
  auto m = fixtures::stationary_z2();
  auto k = LatticeSubgroup::full(2);
  auto e = embed(m.kernel_fn(), Window::box({0, 0}, {5, 5}));
  auto sys = k_shift(e, k);
  auto u = lift_and_extend(sys, k);
  CHECK(max_abs_diff(u.power({1, 0}), sys.ops[0]) <= 1e-8);
  CHECK(max_abs_diff(u.power({0, 1}), sys.ops[1]) <= 1e-8);
  // The lifted atoms are the model's frequencies.
  for (const auto& a : u.atoms()) {
    bool found = false;
    for (const auto& b : m.unitary().atoms()) found = found || a.freq.near(b.freq, 1e-8);
    CHECK(found);
  }
}

TEST_CASE("dependent generators must carry consistent phases") {
  auto m = fixtures::two_pc();
  auto k = LatticeSubgroup::parse("2;4");
  auto e = embed(m.kernel_fn(), Window::box({0}, {9}));
  auto sys = k_shift(e, k);
  auto u = lift_and_extend(sys, k);
  CHECK(shift_agreement(u, sys) <= 1e-8);
  sys.spaces[0].phases[1] = wrap_angle(sys.spaces[0].phases[1] + 0.5);
  CHECK_THROWS_AS(lift_and_extend(sys, k), NumericalError);
}

TEST_CASE("periodic part") {
  SUBCASE("stationary: P is constant") {
    auto m = fixtures::unit_stationary_z();
    Window w = Window::box({-4}, {4});
    auto e = embed(m.kernel_fn(), w);
    auto k = LatticeSubgroup::full(1);
    auto u = lift_and_extend(k_shift(e, k), k);
    auto pp = periodic_part(e, u, k);
    CHECK(pp.field.table().size() == 1);
    CHECK(pp.periodicity <= 1e-8);
  }
  SUBCASE("two-periodic amplitude: P follows f up to gauge") {
    auto m = fixtures::two_pc();
    Window w = Window::box({-4}, {4});
    auto e = embed(m.kernel_fn(), w);
    auto u = lift_and_extend(k_shift(e, m.subgroup()), m.subgroup());
    auto pp = periodic_part(e, u, m.subgroup());
    REQUIRE(pp.field.table().size() == 2);
    CHECK(std::abs(pp.field.at({1}).norm() / pp.field.at({0}).norm() - 2.0) <= 1e-9);
    CHECK(pp.periodicity <= 1e-8);
  }
  SUBCASE("weak model along (12,9)") {
    auto m = fixtures::weak_pc();
    Window w = weak_window();
    auto e = embed(m.kernel_fn(), w);
    auto u = lift_and_extend(k_shift(e, m.subgroup()), m.subgroup());
    auto pp = periodic_part(e, u, m.subgroup());
    CHECK(pp.periodicity <= 1e-8 * std::sqrt(e.scale));
  }
}

TEST_CASE("decomposition roundtrip") {
  SUBCASE("stationary Z2") {
    auto m = fixtures::stationary_z2();
    check_report(decompose(m.kernel_fn(), Window::box({0, 0}, {8, 8}), LatticeSubgroup::full(2)).report);
  }
  SUBCASE("two-periodic on Z") {
    auto m = fixtures::two_pc();
    check_report(decompose(m.kernel_fn(), Window::box({0}, {8}), m.subgroup()).report);
  }
  SUBCASE("2Z x 3Z") {
    auto m = fixtures::strong_pc();
    auto d = decompose(m.kernel_fn(), Window::box({0, 0}, {8, 8}), m.subgroup());
    check_report(d.report);
    CHECK(d.report.rank == 3);
    // The rebuilt model is a model in its own right: K-PC beyond the window.
    CHECK(k_pc_violation(d.model.kernel_fn(), m.subgroup(), Window::box({-3, -3}, {3, 3})) <= 1e-8 * d.report.scale);
  }
  SUBCASE("weak (12,9)") {
    auto m = fixtures::weak_pc();
    auto d = decompose(m.kernel_fn(), weak_window(), m.subgroup());
    check_report(d.report);
  }
  SUBCASE("repeated joint phases") {
    // χ and χ + (π, 0) have the same phases on 2Z x 3Z.
    std::mt19937_64 rng(17);
    auto u = fixtures::random_rep({Frequency({grid(1, 12), grid(2, 12)}), Frequency({grid(7, 12), grid(2, 12)}),
                                   Frequency({grid(4, 12), grid(5, 12)})},
                                  {1, 2, 1}, rng);
    QuotientStructure q(LatticeSubgroup::parse("2,0;0,3"));
    std::map<QuotientCoord, CVector> values;
    for (const auto& x : q.enumerate(0)) values[x] = fixtures::random_vector(4, rng);
    auto m = make_model(u, PeriodicField::from_table(q, 4, values));
    auto d = decompose(m.kernel_fn(), Window::box({0, 0}, {8, 8}), m.subgroup());
    check_report(d.report);
    std::size_t largest = 0;
    for (const auto& s : d.shifts.spaces) largest = std::max<std::size_t>(largest, static_cast<std::size_t>(s.basis.cols()));
    CHECK(largest >= 2);
  }
  SUBCASE("gauge: first nonzero coordinate of each basis vector is real positive") {
    auto m = fixtures::strong_pc();
    auto d = decompose(m.kernel_fn(), Window::box({0, 0}, {8, 8}), m.subgroup());
    for (const auto& a : d.model.unitary().atoms())
      for (Eigen::Index c = 0; c < a.basis.cols(); ++c) {
        Eigen::Index r = 0;
        while (std::abs(a.basis(r, c)) <= 1e-8) ++r;
        CHECK(a.basis(r, c).imag() == 0);
        CHECK(a.basis(r, c).real() > 0);
      }
  }
}

TEST_CASE("Gladyshev components") {
  std::mt19937_64 rng(21);
  auto random_point = [&](Int lo, Int hi) {
    std::uniform_int_distribution<Int> d(lo, hi);
    return Point{d(rng), d(rng)};
  };
  SUBCASE("stationary: a single component equal to X") {
    auto m = fixtures::stationary_z2();
    auto g = gladyshev_components(m);
    REQUIRE(g.size() == 1);
    for (int i = 0; i < 10; ++i) {
      Point t = random_point(-9, 9);
      CHECK((g.component(0, t) - m.eval(t)).norm() <= 1e-12);
    }
  }
  SUBCASE("two-periodic: two components reconstruct X") {
    auto m = fixtures::two_pc();
    auto g = gladyshev_components(m);
    REQUIRE(g.size() == 2);
    for (Int t = -9; t <= 9; ++t) CHECK((g.reconstruct({t}) - m.eval({t})).norm() <= 1e-9);
  }
  SUBCASE("2Z x 3Z: six jointly stationary components") {
    auto m = fixtures::strong_pc();
    auto g = gladyshev_components(m);
    REQUIRE(g.size() == 6);
    for (int i = 0; i < 30; ++i) {
      Point t = random_point(-9, 9);
      CHECK((g.reconstruct(t) - m.eval(t)).norm() <= 1e-9);
    }
    for (int trial = 0; trial < 30; ++trial) {
      Point t = random_point(-9, 9), s = random_point(-9, 9), u = random_point(-50, 50);
      for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = 0; b < g.size(); ++b) {
          Complex base = inner(g.component(a, t), g.component(b, s));
          Complex moved = inner(g.component(a, add_points(t, u)), g.component(b, add_points(s, u)));
          CHECK(std::abs(base - moved) <= 1e-9);
        }
    }
  }
  SUBCASE("infinite annihilator is unsupported") {
    CHECK_THROWS_AS(gladyshev_components(fixtures::weak_pc()), UndecidableError);
  }
}
