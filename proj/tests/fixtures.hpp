#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/QR>

#include "pcfield/model.hpp"

namespace fixtures {

using namespace pcf;

inline CMatrix random_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  CMatrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = Complex(n(rng), n(rng));
  Eigen::HouseholderQR<CMatrix> qr(a);
  return qr.householderQ() * CMatrix::Identity(d, d);
}

inline CVector random_vector(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  CVector v(d);
  for (int i = 0; i < d; ++i) v(i) = Complex(n(rng), n(rng));
  return v;
}

/// Angle 2πk/n.
inline double grid(int k, int n) { return 2 * std::numbers::pi * k / n; }

/// Atoms with the given frequencies, eigenspaces of the given sizes cut from a
/// random unitary.
inline UnitaryRep random_rep(const std::vector<Frequency>& freqs, const std::vector<int>& sizes,
                             std::mt19937_64& rng) {
  int d = 0;
  for (int s : sizes) d += s;
  CMatrix q = random_unitary(d, rng);
  std::vector<SpectralAtom> atoms;
  int col = 0;
  for (std::size_t j = 0; j < freqs.size(); ++j) {
    atoms.push_back({freqs[j], q.middleCols(col, sizes[j])});
    col += sizes[j];
  }
  return UnitaryRep(freqs.front().dim(), d, atoms);
}

/// Stationary field on ℤ² with three atoms on a 2π/12 grid.
inline PCFieldModel stationary_z2() {
  std::mt19937_64 rng(11);
  auto u = random_rep({Frequency({grid(1, 12), grid(5, 12)}), Frequency({grid(7, 12), grid(2, 12)}),
                       Frequency({grid(3, 12), grid(10, 12)})},
                      {1, 2, 1}, rng);
  return stationary_model(u, random_vector(4, rng));
}

/// Stationary Y on ℤ with R_Y(0) = 1, atoms at 2π/8 and 6π/8.
inline PCFieldModel unit_stationary_z() {
  UnitaryRep u = UnitaryRep::diagonal({Frequency({grid(1, 8)}), Frequency({grid(3, 8)})});
  CVector p(2);
  p << Complex(std::sqrt(0.5), 0), Complex(0, std::sqrt(0.5));
  return stationary_model(u, p);
}

/// X(t) = f(t)Y(t) on ℤ with f = (1, 2) repeating.
inline PCFieldModel two_pc() {
  return amplitude_modulated([](const Point& t) { return Complex(mod_floor(t[0], 2) == 0 ? 1.0 : 2.0, 0); },
                             LatticeSubgroup::parse("2"), unit_stationary_z(), Window::box({-4}, {4}));
}

/// Strongly PC on ℤ² with K = 2ℤ×3ℤ: random table P over the 6 cosets.
inline PCFieldModel strong_pc() {
  std::mt19937_64 rng(23);
  auto u = random_rep({Frequency({grid(1, 12), grid(2, 12)}), Frequency({grid(5, 12), grid(9, 12)}),
                       Frequency({grid(8, 12), grid(3, 12)})},
                      {1, 1, 1}, rng);
  QuotientStructure q(LatticeSubgroup::parse("2,0;0,3"));
  std::map<QuotientCoord, CVector> values;
  for (const auto& x : q.enumerate(0)) values[x] = random_vector(3, rng);
  return make_model(u, PeriodicField::from_table(q, 3, values));
}

/// Weakly PC on ℤ² with K = {k(12,9)}: geometric decay ρ = 1/2 along the free
/// coordinate, random profile over the 3 torsion residues.
inline PCFieldModel weak_pc() {
  std::mt19937_64 rng(37);
  auto u = random_rep({Frequency({grid(1, 12), grid(4, 12)}), Frequency({grid(6, 12), grid(11, 12)})}, {1, 1}, rng);
  QuotientStructure q(LatticeSubgroup::parse("12,9"));
  std::map<QuotientCoord, CVector> profile;
  for (Int j = 0; j < 3; ++j) profile[{j}] = random_vector(2, rng);
  return make_model(u, PeriodicField::geometric(q, profile, 0.5));
}

inline double kernel_scale(const PCFieldModel& m, const Window& w) {
  double s = 0;
  for (const auto& t : w.points()) s = std::max(s, std::abs(m.kernel(t, t)));
  return s;
}

}  // namespace fixtures
