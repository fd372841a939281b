#include "pcfield/wpc2.hpp"

#include <cmath>
#include <numbers>

#include "pcfield/errors.hpp"

namespace pcf {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double ratio_angle(Int k, Int d) { return kTwoPi * static_cast<double>(mod_floor(k, d)) / static_cast<double>(d); }

double fd(Int v) { return static_cast<double>(v); }

}  // namespace

WpcParams WpcParams::make(Int t, Int s) {
  if (t == 0 && s == 0) throw ContractError("period vector must be non-zero");
  WpcParams w;
  w.T = t;
  w.S = s;
  w.bz = bezout_phi(t, s);
  return w;
}

LatticeSubgroup WpcParams::subgroup() const {
  IntMatrix g(1, 2);
  g << T, S;
  return LatticeSubgroup(2, g);
}

Point WpcParams::phi(const Point& mn) const {
  if (mn.size() != 2) throw ContractError("expected a point of Z^2");
  return {checked_add(checked_mul(mn[0], bz.t1), checked_mul(mn[1], bz.p)),
          checked_add(checked_mul(mn[0], bz.s1), checked_mul(mn[1], bz.q))};
}

Point WpcParams::phi_inverse(const Point& t) const {
  if (t.size() != 2) throw ContractError("expected a point of Z^2");
  return {checked_sub(checked_mul(bz.q, t[0]), checked_mul(bz.p, t[1])),
          checked_sub(checked_mul(bz.t1, t[1]), checked_mul(bz.s1, t[0]))};
}

Frequency WpcParams::psi(double s, double t) const {
  return Frequency({wrap_angle(fd(bz.q) * s - fd(bz.s1) * t), wrap_angle(-fd(bz.p) * s + fd(bz.t1) * t)});
}

std::array<double, 2> WpcParams::psi_inverse(const Frequency& chi) const {
  if (chi.dim() != 2) throw ContractError("expected a frequency on the 2-torus");
  return {wrap_angle(chi[0] * fd(bz.t1) + chi[1] * fd(bz.s1)), wrap_angle(chi[0] * fd(bz.p) + chi[1] * fd(bz.q))};
}

Frequency lambda_line(const WpcParams& w, Int k, double t) { return w.psi(ratio_angle(k, w.bz.d), t); }

std::vector<std::vector<Frequency>> lambda_lines(const WpcParams& w, int samples) {
  if (samples < 1) throw ContractError("need at least one sample per line");
  std::vector<std::vector<Frequency>> lines;
  for (Int k = 0; k < w.bz.d; ++k) {
    auto& line = lines.emplace_back();
    for (int i = 0; i < samples; ++i) line.push_back(lambda_line(w, k, kTwoPi * i / samples));
  }
  return lines;
}

std::optional<std::pair<Int, double>> locate(const WpcParams& w, const Frequency& lambda, double eps) {
  auto [s, t] = w.psi_inverse(lambda);
  double d = fd(w.bz.d);
  Int k = mod_floor(static_cast<Int>(std::llround(s * d / kTwoPi)), w.bz.d);
  if (angular_distance(s, ratio_angle(k, w.bz.d)) > eps) return std::nullopt;
  return std::pair{k, t};
}

std::array<double, 4> plane_point(const WpcParams& w, Int k, double t, double x, double y) {
  Frequency l = lambda_line(w, k, t);
  return {wrap_angle(x), wrap_angle(y), wrap_angle(x - l[0]), wrap_angle(y - l[1])};
}

bool on_plane(const WpcParams& w, Int k, double t, const Frequency& chi, const Frequency& chi2, double eps) {
  auto pt = plane_point(w, k, t, chi[0], chi[1]);
  return angular_distance(pt[2], chi2[0]) <= eps && angular_distance(pt[3], chi2[1]) <= eps;
}

SpectralValue a_kt(const PCFieldModel& m, const WpcParams& w, Int k, double t, const Point& mn, Int truncation) {
  if (m.lattice_dim() != 2) throw ContractError("model must live on Z^2");
  if (m.subgroup().hnf() != w.subgroup().hnf()) throw ContractError("model period subgroup differs from {j(T,S)}");
  if (truncation < 0) throw ContractError("truncation must be non-negative");
  const PeriodicField& p = m.periodic();
  double tail = p.tail_mass(truncation);
  if (!std::isfinite(tail)) throw ContractError("field is not square integrable over the quotient");

  const Int d = w.bz.d;
  Complex sum = 0;
  double mass = tail;
  for (Int j = 0; j < d; ++j)
    for (Int l = -truncation; l <= truncation; ++l) {
      Point x = w.phi({j, l});
      mass += p.at_point(x).squaredNorm();
      double ph = std::fmod(ratio_angle(j * k, d) + std::fmod(fd(l) * t, kTwoPi), kTwoPi);
      sum += std::polar(1.0, -ph) * m.kernel(add_points(mn, x), x);
    }
  return {sum / fd(d), std::sqrt(tail * mass) / fd(d)};
}

PCFieldModel rotate_to_stationary(const PCFieldModel& m, const WpcParams& w) {
  if (w.bz.d != 1) throw ContractError("rotation to a stationary field needs gcd(T,S) = 1");
  if (m.lattice_dim() != 2 || m.subgroup().hnf() != w.subgroup().hnf())
    throw ContractError("model period subgroup differs from {j(T,S)}");

  std::vector<SpectralAtom> atoms;
  for (const auto& a : m.unitary().atoms()) {
    auto c = w.psi_inverse(a.freq);
    atoms.push_back({Frequency({c[0], c[1]}), a.basis});
  }
  UnitaryRep u(2, m.dim(), std::move(atoms));

  IntMatrix g(1, 2);
  g << 1, 0;
  QuotientStructure q2(LatticeSubgroup(2, g));
  const QuotientStructure& q = m.quotient();
  const PeriodicField& p = m.periodic();
  auto to_old = [q2, q, w](const QuotientCoord& x) { return q.to_quotient(w.phi(q2.section(x))); };
  auto to_new = [q2, q, w](const QuotientCoord& x) { return q2.to_quotient(w.phi_inverse(q.section(x))); };

  // |free| is preserved by the coordinate change, so tails and envelopes carry over.
  switch (p.kind()) {
    case PeriodicField::Kind::Table: {
      std::map<QuotientCoord, CVector> t;
      for (const auto& [x, v] : p.table()) t[to_new(x)] = v;
      return make_model(std::move(u), PeriodicField::from_table(q2, p.dim(), std::move(t), p.envelope()));
    }
    case PeriodicField::Kind::Geometric:
      return make_model(std::move(u), PeriodicField::geometric(q2, p.table(), p.rho()));
    case PeriodicField::Kind::Function:
      break;
  }
  return make_model(std::move(u), PeriodicField::from_function(
                                      q2, p.dim(), [p, to_old](const QuotientCoord& x) { return p.at(to_old(x)); },
                                      p.envelope(), p.support_radius()));
}

std::vector<FigureRow> figure_data(const WpcParams& w, int samples) {
  if (samples < 2) throw ContractError("figure needs at least two samples per line");
  std::vector<FigureRow> rows;
  for (Int k = 0; k < w.bz.d; ++k)
    for (int i = 0; i < samples; ++i) {
      double t = kTwoPi * i / (samples - 1);
      Frequency l = lambda_line(w, k, t);
      rows.push_back({k, t, l[0], l[1]});
    }
  return rows;
}

std::vector<std::vector<FigureRow>> figure_segments(const std::vector<FigureRow>& rows) {
  std::vector<std::vector<FigureRow>> out;
  for (const auto& r : rows) {
    bool cut = out.empty() || out.back().back().k != r.k ||
               std::abs(r.u - out.back().back().u) > std::numbers::pi ||
               std::abs(r.v - out.back().back().v) > std::numbers::pi;
    if (cut) out.emplace_back();
    out.back().push_back(r);
  }
  return out;
}

}  // namespace pcf
