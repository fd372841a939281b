#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "pcfield/errors.hpp"
#include "pcfield/model.hpp"

using namespace pcf;
using fixtures::grid;

constexpr double kPi = std::numbers::pi;

namespace {

Point random_point(std::mt19937_64& rng, int n, Int lo, Int hi) {
  std::uniform_int_distribution<Int> d(lo, hi);
  Point t(static_cast<std::size_t>(n));
  for (auto& c : t) c = d(rng);
  return t;
}

// Oracle: R_Y(τ) of a stationary model from its atoms, Σ e^{iχτ}‖Projⱼ p‖².
Complex stationary_r(const PCFieldModel& y, const Point& tau) {
  CVector p = y.periodic().at(QuotientCoord{});
  Complex r = 0;
  for (const auto& a : y.unitary().atoms()) {
    double ph = 0;
    for (std::size_t i = 0; i < tau.size(); ++i) ph += a.freq[i] * static_cast<double>(tau[i]);
    r += std::polar(1.0, ph) * (a.basis.adjoint() * p).squaredNorm();
  }
  return r;
}

}  // namespace

TEST_CASE("unitary group law and isometry") {
  std::mt19937_64 rng(5);
  auto u = fixtures::random_rep({Frequency({0.3, 1.9}), Frequency({4.0, 2.2}), Frequency({5.5, 0.1})}, {2, 1, 2}, rng);
  for (int trial = 0; trial < 100; ++trial) {
    Point t = random_point(rng, 2, -40, 40), s = random_point(rng, 2, -40, 40);
    CMatrix ut = u.power(t), us = u.power(s);
    CHECK((u.power(add_points(t, s)) - ut * us).cwiseAbs().maxCoeff() <= 1e-10);
    CVector v = fixtures::random_vector(5, rng);
    CHECK(std::abs(u.apply(t, v).norm() - v.norm()) <= 1e-10 * v.norm());
    CHECK((u.apply(t, v) - ut * v).norm() <= 1e-10 * v.norm());
  }
}

TEST_CASE("unitary representation rejects bad atoms") {
  CMatrix b(2, 1);
  b << 1, 1;
  CMatrix c(2, 1);
  c << 0, 1;
  CHECK_THROWS_AS(UnitaryRep(1, 2, {{Frequency({0.0}), b}, {Frequency({1.0}), c}}), ContractError);
  CHECK_THROWS_AS(UnitaryRep(1, 2, {{Frequency({0.0}), c}}), ContractError);
  CMatrix e0 = CMatrix::Identity(2, 2).col(0);
  CHECK_THROWS_AS(UnitaryRep(1, 2, {{Frequency({1.0}), e0}, {Frequency({1.0}), c}}), ContractError);
  CHECK_NOTHROW(UnitaryRep(1, 2, {{Frequency({0.0}), e0}, {Frequency({1.0}), c}}));
}

TEST_CASE("trivial representation with constant field has constant kernel") {
  CVector p(3);
  p << Complex(1, 2), Complex(0, -1), Complex(0.5, 0);
  auto m = stationary_model(UnitaryRep::trivial(2, 3), p);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i)
    CHECK(std::abs(m.kernel(random_point(rng, 2, -9, 9), random_point(rng, 2, -9, 9)) - p.squaredNorm()) <= 1e-12);
}

TEST_CASE("two-periodic model is K-PC and kernel matches the projection formula") {
  std::mt19937_64 rng(2);
  auto u = fixtures::random_rep({Frequency({0.0}), Frequency({kPi})}, {1, 1}, rng);
  QuotientStructure q(LatticeSubgroup::parse("2"));
  std::map<QuotientCoord, CVector> values{{{0}, fixtures::random_vector(2, rng)}, {{1}, fixtures::random_vector(2, rng)}};
  auto m = make_model(u, PeriodicField::from_table(q, 2, values));
  Window w = Window::box({-8}, {8});
  CHECK(k_pc_violation(m.kernel_fn(), m.subgroup(), w) <= 1e-10);
  for (const auto& t : w.points())
    for (const auto& s : w.points()) {
      // Oracle: Σⱼ e^{iχⱼ(t−s)} (Projⱼ P(t), Projⱼ P(s)) with P looked up by parity.
      CVector pt = values.at({mod_floor(t[0], 2)}), ps = values.at({mod_floor(s[0], 2)});
      Complex expect = 0;
      for (std::size_t j = 0; j < 2; ++j) {
        const auto& a = u.atoms()[j];
        expect += std::polar(1.0, a.freq[0] * static_cast<double>(t[0] - s[0])) *
                  (a.basis.adjoint() * ps).dot(a.basis.adjoint() * pt);
      }
      CHECK(std::abs(m.kernel(t, s) - expect) <= 1e-12);
    }
}

TEST_CASE("model construction rejects mismatched dimensions") {
  QuotientStructure q(LatticeSubgroup::parse("2"));
  std::map<QuotientCoord, CVector> values{{{0}, CVector::Ones(3)}};
  CHECK_THROWS_AS(make_model(UnitaryRep::trivial(1, 2), PeriodicField::from_table(q, 3, values)), ContractError);
  CHECK_THROWS_AS(PeriodicField::from_table(q, 2, values), ContractError);
  std::map<QuotientCoord, CVector> bad{{{5}, CVector::Ones(1)}};
  CHECK_THROWS_AS(PeriodicField::from_table(q, 1, bad), ContractError);
}

TEST_CASE("amplitude modulation") {
  auto y = fixtures::unit_stationary_z();
  Window w = Window::box({-6}, {6});
  SUBCASE("identity modulation leaves the kernel unchanged") {
    auto x = amplitude_modulated([](const Point&) { return Complex(1, 0); }, LatticeSubgroup::parse("3"), y, w);
    for (const auto& t : w.points())
      for (const auto& s : w.points()) CHECK(std::abs(x.kernel(t, s) - y.kernel(t, s)) <= 1e-12);
  }
  SUBCASE("two-periodic amplitude") {
    auto x = fixtures::two_pc();
    CHECK(std::abs(stationary_r(y, {0}) - 1.0) <= 1e-12);
    CHECK(std::abs(x.big_b({0}, {0}) - 1.0) <= 1e-12);
    CHECK(std::abs(x.big_b({0}, {1}) - 4.0) <= 1e-12);
    CHECK(k_pc_violation(x.kernel_fn(), x.subgroup(), w) <= 1e-10);
    auto f = [](Int t) { return mod_floor(t, 2) == 0 ? 1.0 : 2.0; };
    for (const auto& t : w.points())
      for (const auto& s : w.points())
        CHECK(std::abs(x.kernel(t, s) - f(t[0]) * f(s[0]) * stationary_r(y, {t[0] - s[0]})) <= 1e-12);
  }
  SUBCASE("non-periodic modulation is rejected") {
    auto f = [](const Point& t) { return Complex(static_cast<double>(t[0]), 0); };
    CHECK_THROWS_AS(amplitude_modulated(f, LatticeSubgroup::parse("2"), y, w), DomainError);
  }
  SUBCASE("non-stationary base is rejected") {
    CHECK_THROWS_AS(amplitude_modulated([](const Point&) { return Complex(1, 0); }, LatticeSubgroup::parse("2"),
                                        fixtures::two_pc(), w),
                    ContractError);
  }
  SUBCASE("one-generator period on Z2 gives a weakly PC model") {
    auto y2 = fixtures::stationary_z2();
    QuotientStructure q(LatticeSubgroup::parse("3,2"));
    auto f = [q](const Point& t) {
      QuotientCoord x = q.to_quotient(t);
      return std::pow(0.5, static_cast<double>(std::abs(x.back()))) * Complex(1.0 + static_cast<double>(t[0] * 2 - t[1] * 3 == 0), 0.5);
    };
    Window w2 = Window::box({-3, -3}, {3, 3});
    CHECK_THROWS_AS(amplitude_modulated(f, LatticeSubgroup::parse("3,2"), y2, w2, Envelope{1.0, 0.5}), DomainError);
    auto g = [q](const Point& t) {
      QuotientCoord x = q.to_quotient(t);
      return std::pow(0.5, static_cast<double>(std::abs(x.back()))) * Complex(1.0, 0.5);
    };
    auto x = amplitude_modulated(g, LatticeSubgroup::parse("3,2"), y2, w2, Envelope{std::abs(Complex(1.0, 0.5)), 0.5});
    CHECK(x.quotient().free_rank() == 1);
    CHECK(x.quotient().torsion().empty());
    CHECK(k_pc_violation(x.kernel_fn(), x.subgroup(), w2) <= 1e-10);
    auto si = is_square_integrable(x);
    CHECK(si.finite);
    // Oracle: |g|²‖p‖²·Σ_l 4^{−|l|} = |g|²‖p‖²·5/3.
    double p2 = y2.periodic().at({}).squaredNorm();
    CHECK(std::abs(si.value + si.tail_bound - 1.25 * p2 * 5.0 / 3.0) <= 1e-9 * p2);
  }
}

TEST_CASE("time deformation") {
  auto y = fixtures::unit_stationary_z();
  Window w = Window::box({-6}, {6});
  SUBCASE("zero deformation") {
    auto x = time_deformed([](const Point&) { return std::vector<double>{0.0}; }, LatticeSubgroup::parse("2"), y, w);
    for (const auto& t : w.points())
      for (const auto& s : w.points()) CHECK(std::abs(x.kernel(t, s) - y.kernel(t, s)) <= 1e-12);
  }
  SUBCASE("period two, f = (0, 1)") {
    auto f = [](const Point& t) { return std::vector<double>{static_cast<double>(mod_floor(t[0], 2))}; };
    auto x = time_deformed(f, LatticeSubgroup::parse("2"), y, w);
    CHECK(std::abs(x.kernel({0}, {1}) - stationary_r(y, {-2})) <= 1e-12);
    for (const auto& t : w.points())
      for (const auto& s : w.points()) {
        Int tt = t[0] + mod_floor(t[0], 2), ss = s[0] + mod_floor(s[0], 2);
        CHECK(std::abs(x.kernel(t, s) - stationary_r(y, {tt - ss})) <= 1e-12);
      }
    CHECK(k_pc_violation(x.kernel_fn(), x.subgroup(), w) <= 1e-10);
  }
  SUBCASE("one-generator deformation on Z2") {
    auto y2 = fixtures::stationary_z2();
    QuotientStructure q(LatticeSubgroup::parse("2,1"));
    auto f = [q](const Point& t) {
      QuotientCoord x = q.to_quotient(t);
      return std::vector<double>{static_cast<double>(mod_floor(x.back(), 3)), -1.0};
    };
    Window w2 = Window::box({-3, -3}, {3, 3});
    auto x = time_deformed(f, LatticeSubgroup::parse("2,1"), y2, w2);
    CHECK(k_pc_violation(x.kernel_fn(), x.subgroup(), w2) <= 1e-10);
    CHECK_FALSE(is_square_integrable(x).finite);
  }
  SUBCASE("non-integer deformation is rejected") {
    CHECK_THROWS_AS(time_deformed([](const Point&) { return std::vector<double>{0.5}; }, LatticeSubgroup::parse("2"), y, w),
                    DomainError);
  }
  SUBCASE("non-periodic deformation is rejected") {
    auto f = [](const Point& t) { return std::vector<double>{static_cast<double>(t[0])}; };
    CHECK_THROWS_AS(time_deformed(f, LatticeSubgroup::parse("2"), y, w), DomainError);
  }
}

TEST_CASE("b and B functions") {
  std::mt19937_64 rng(9);
  for (const auto& m : {fixtures::stationary_z2(), fixtures::strong_pc(), fixtures::weak_pc()}) {
    const auto& q = m.quotient();
    for (int trial = 0; trial < 60; ++trial) {
      Point t = random_point(rng, 2, -10, 10), s = random_point(rng, 2, -10, 10), u = random_point(rng, 2, -10, 10);
      Complex lhs = m.b(t, s, q.to_quotient(u));
      Complex rhs = m.big_b(sub_points(t, s), q.to_quotient(add_points(s, u)));
      CHECK(std::abs(lhs - rhs) <= 1e-10 * (1 + std::abs(lhs)));
      QuotientCoord x = q.to_quotient(u);
      Complex b0 = m.big_b({0, 0}, x);
      CHECK(std::abs(b0.imag()) <= 1e-12 * (1 + b0.real()));
      CHECK(b0.real() >= 0);
    }
  }
  auto st = fixtures::stationary_z2();
  for (int trial = 0; trial < 20; ++trial) {
    Point t = random_point(rng, 2, -10, 10);
    CHECK(std::abs(st.big_b(t, {}) - st.kernel(t, {0, 0})) <= 1e-12);
  }
}

TEST_CASE("square integrability") {
  SUBCASE("finite quotient with unit norms") {
    auto u = UnitaryRep::trivial(2, 1);
    QuotientStructure q(LatticeSubgroup::parse("2,0;0,3"));
    std::map<QuotientCoord, CVector> values;
    for (const auto& x : q.enumerate(0)) values[x] = CVector::Constant(1, Complex(0.6, 0.8));
    auto r = is_square_integrable(make_model(u, PeriodicField::from_table(q, 1, values)));
    CHECK(r.finite);
    CHECK(std::abs(r.value - 6.0) <= 1e-12);
    CHECK(std::abs(r.haar_value - 1.0) <= 1e-12);
    CHECK(r.tail_bound == 0);
  }
  SUBCASE("geometric envelope on the free coordinate") {
    QuotientStructure q(LatticeSubgroup::parse("12,9"));
    std::map<QuotientCoord, CVector> profile;
    for (Int j = 0; j < 3; ++j) profile[{j}] = CVector::Ones(1);
    auto m = make_model(UnitaryRep::trivial(2, 1), PeriodicField::geometric(q, profile, 0.5));
    // Oracle: torsion·Σ_l ρ^{2|l|} by direct summation far past the truncation.
    double direct = 0;
    for (Int l = -400; l <= 400; ++l) direct += 3 * std::pow(0.25, static_cast<double>(std::abs(l)));
    for (Int trunc : {2, 8, 64}) {
      auto r = is_square_integrable(m, trunc);
      CHECK(r.finite);
      CHECK(r.value <= direct);
      CHECK(std::abs(r.value + r.tail_bound - direct) <= 1e-12 * direct);
    }
    CHECK(std::abs(direct - 5.0) <= 1e-12);
  }
  SUBCASE("non-decaying values diverge") {
    auto m = make_model(UnitaryRep::trivial(2, 1), PeriodicField::constant(QuotientStructure(LatticeSubgroup::parse("12,9")),
                                                                           CVector::Ones(1)));
    CHECK_FALSE(is_square_integrable(m).finite);
  }
  SUBCASE("no decay information is undecidable") {
    QuotientStructure q(LatticeSubgroup::parse("12,9"));
    auto p = PeriodicField::from_function(q, 1, [](const QuotientCoord&) { return CVector(CVector::Ones(1)); });
    CHECK_THROWS_AS(is_square_integrable(make_model(UnitaryRep::trivial(2, 1), p)), UndecidableError);
  }
  SUBCASE("finite support on an infinite quotient is exact") {
    QuotientStructure q(LatticeSubgroup::parse("12,9"));
    std::map<QuotientCoord, CVector> values{{{0, 0}, CVector::Ones(1)}, {{2, -5}, 2.0 * CVector::Ones(1)}};
    auto r = is_square_integrable(make_model(UnitaryRep::trivial(2, 1), PeriodicField::from_table(q, 1, values)));
    CHECK(r.finite);
    CHECK(std::abs(r.value - 5.0) <= 1e-12);
    CHECK(r.tail_bound == 0);
    CHECK(is_square_integrable(make_model(UnitaryRep::trivial(2, 1), PeriodicField::from_table(q, 1, values)), 3)
              .tail_bound == doctest::Approx(4.0));
  }
}

TEST_CASE("envelope tail against brute force in two free dimensions") {
  QuotientStructure q(LatticeSubgroup::parse("0,0,4"));
  REQUIRE(q.free_rank() == 2);
  REQUIRE(q.torsion_order() == 4);
  Envelope e{1.5, 0.6};
  auto term = [&](Int a, Int b) { return 4 * e.amplitude * e.amplitude * std::pow(e.rho, 2.0 * static_cast<double>(std::abs(a) + std::abs(b))); };
  for (Int radius : {0, 1, 3, 7}) {
    double brute = 0;
    for (Int a = -150; a <= 150; ++a)
      for (Int b = -150; b <= 150; ++b)
        if (std::max(std::abs(a), std::abs(b)) > radius) brute += term(a, b);
    CHECK(std::abs(envelope_tail(q, e, radius) - brute) <= 1e-10 * brute);
  }
  double all = 0;
  for (Int a = -150; a <= 150; ++a)
    for (Int b = -150; b <= 150; ++b) all += term(a, b);
  CHECK(std::abs(envelope_total(q, e) - all) <= 1e-10 * all);
}

TEST_CASE("sampling") {
  auto m = fixtures::two_pc();
  Window w = Window::box({0}, {5});
  SUBCASE("empirical covariance converges") {
    const int count = 20000;
    auto paths = sample_paths(m.kernel_fn(), w, count, 7);
    CMatrix g = gram(m.kernel_fn(), w);
    CMatrix emp = paths.values.transpose() * paths.values.conjugate() / static_cast<double>(count);
    CHECK(paths.values.rows() == count);
    CHECK((emp - g).cwiseAbs().maxCoeff() <= 5.0 / std::sqrt(count) * gram_scale(g));
  }
  SUBCASE("deterministic under a fixed seed") {
    auto a = sample_paths(m.kernel_fn(), w, 50, 3);
    auto b = sample_paths(m.kernel_fn(), w, 50, 3);
    auto c = sample_paths(m.kernel_fn(), w, 50, 4);
    CHECK(a.values == b.values);
    CHECK(a.values != c.values);
  }
  SUBCASE("zero field gives zero paths") {
    auto z = stationary_model(UnitaryRep::trivial(1, 2), CVector::Zero(2));
    auto p = sample_paths(z.kernel_fn(), w, 10, 1);
    CHECK(p.values.cwiseAbs().maxCoeff() == 0);
  }
  SUBCASE("indefinite kernel is rejected") {
    KernelFn bad = [](const Point& t, const Point& s) { return Complex(t == s ? 1.0 : 0.9 * (t[0] + s[0] == 1 ? -1 : 1), 0); };
    Window w2 = Window::box({0}, {2});
    CHECK(min_eigenvalue(gram(bad, w2)) < 0);
    CHECK_THROWS_AS(sample_paths(bad, w2, 5, 1), NumericalError);
  }
}

TEST_CASE("Gram matrices of models are Hermitian PSD") {
  std::mt19937_64 rng(13);
  for (const auto& m : {fixtures::stationary_z2(), fixtures::strong_pc(), fixtures::weak_pc()}) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<Point> pts;
      for (int i = 0; i < 8; ++i) pts.push_back(random_point(rng, 2, -12, 12));
      std::sort(pts.begin(), pts.end());
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      CMatrix g = gram(m.kernel_fn(), Window(pts));
      CHECK(hermitian_violation(g) <= 1e-12 * gram_scale(g));
      CHECK(min_eigenvalue(g) >= -1e-9 * gram_scale(g));
    }
  }
}
