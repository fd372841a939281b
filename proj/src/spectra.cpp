#include "pcfield/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "pcfield/errors.hpp"

namespace pcf {

namespace {

double dot_phase(const std::vector<double>& theta, const Point& t) {
  double a = 0;
  for (std::size_t i = 0; i < t.size(); ++i) a += std::fmod(theta[i] * static_cast<double>(t[i]), 2 * std::numbers::pi);
  return a;
}

// B_X(t;x) = (Uᵗ P(ı(t)+x), P(x)), the kernel value at (t+ξ(x), ξ(x)) with the
// common factor U^{ξ(x)} cancelled.
Complex fast_b(const PCFieldModel& m, const Point& t, const QuotientCoord& it, const QuotientCoord& x) {
  const PeriodicField& p = m.periodic();
  CVector px = p.at(x);
  if (px.squaredNorm() == 0) return 0;
  return inner(m.unitary().apply(t, p.at(m.quotient().add(it, x))), px);
}

struct QuotientSum {
  std::vector<QuotientCoord> points;
  double mass = 0;  // Σ‖P‖² over all quotient points, bounded above
  double tail = 0;  // Σ‖P‖² over points left out
};

QuotientSum quotient_sum(const PeriodicField& p, Int truncation) {
  QuotientSum s;
  s.points = summation_points(p, truncation);
  s.tail = p.tail_mass(truncation);
  if (!std::isfinite(s.tail)) throw ContractError("field is not square integrable over the quotient");
  for (const auto& x : s.points) s.mass += p.at(x).squaredNorm();
  s.mass += s.tail;
  return s;
}

}  // namespace

void require_annihilator(const Frequency& lambda, const LatticeSubgroup& k) {
  if (lambda.dim() != k.dim()) throw DomainError("frequency has the wrong dimension");
  if (!annihilates(lambda, k)) throw DomainError("frequency is not in the annihilator of the period subgroup");
}

SpectralValue spectral_covariance(const PCFieldModel& m, const Frequency& lambda, const Point& t, Int truncation) {
  require_annihilator(lambda, m.subgroup());
  const QuotientStructure& q = m.quotient();
  QuotientSum sum = quotient_sum(m.periodic(), truncation);
  QuotientCoord it = q.to_quotient(t);
  Complex v = 0;
  for (const auto& x : sum.points) v += character(lambda, q, x) * fast_b(m, t, it, x);
  double w = q.haar_weight();
  return {w * v, w * std::sqrt(sum.tail * sum.mass)};
}

ZField z_field(const PCFieldModel& m, const Frequency& lambda, const Point& t, Int truncation) {
  require_annihilator(lambda, m.subgroup());
  const QuotientStructure& q = m.quotient();
  QuotientSum sum = quotient_sum(m.periodic(), truncation);
  QuotientCoord minus_it = q.negate(q.to_quotient(t));
  ZField z;
  z.weight = q.haar_weight();
  z.tail_bound = std::sqrt(sum.tail);
  for (const auto& y : sum.points) {
    QuotientCoord x = q.add(y, minus_it);
    z.points.push_back(x);
    z.values.push_back(character(lambda, q, y) * m.eval(add_points(t, q.section(x))));
  }
  return z;
}

Complex z_inner(const ZField& a, const ZField& b) {
  std::map<QuotientCoord, const CVector*> other;
  for (std::size_t i = 0; i < b.points.size(); ++i) other[b.points[i]] = &b.values[i];
  Complex s = 0;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    auto it = other.find(a.points[i]);
    if (it != other.end()) s += inner(a.values[i], *it->second);
  }
  return a.weight * s;
}

ScorrSides scorr_check(const PCFieldModel& m, const Frequency& lambda, const Frequency& mu, const Point& t,
                       const Point& s, Int truncation) {
  ZField zl = z_field(m, lambda, t, truncation);
  ZField zm = z_field(m, mu, s, truncation);
  Point tau = sub_points(t, s);
  SpectralValue a = spectral_covariance(m, lambda - mu, tau, truncation);
  ScorrSides out;
  out.lhs = z_inner(zl, zm);
  out.rhs = character(lambda, tau) * a.value;
  double norm = std::sqrt(quotient_sum(m.periodic(), truncation).mass);
  // Omitted terms of either table, by Cauchy-Schwarz, plus the rhs tail.
  out.tail_bound = zl.weight * (zl.tail_bound * norm + norm * zm.tail_bound) + a.tail_bound;
  return out;
}

void AtomicMeasure::add(const Frequency& location, Complex weight) {
  for (auto& a : atoms_)
    if (a.location.near(location)) {
      a.weight += weight;
      return;
    }
  atoms_.push_back({location, weight});
}

void AtomicMeasure::prune(double threshold) {
  std::erase_if(atoms_, [&](const Atom& a) { return std::abs(a.weight) <= threshold; });
  std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.location.less(b.location); });
}

double AtomicMeasure::variation() const {
  double v = 0;
  for (const auto& a : atoms_) v += std::abs(a.weight);
  return v;
}

Complex AtomicMeasure::fourier(const Point& t) const {
  Complex s = 0;
  for (const auto& a : atoms_) s += std::polar(1.0, dot_phase(a.location.theta(), t)) * a.weight;
  return s;
}

const AtomicMeasure::Atom* AtomicMeasure::find(const Frequency& location) const {
  for (const auto& a : atoms_)
    if (a.location.near(location)) return &a;
  return nullptr;
}

CVector periodic_fourier(const PeriodicField& p, const Frequency& mu) {
  const QuotientStructure& q = p.quotient();
  if (!q.is_finite()) throw UndecidableError("Fourier coefficients of P need a finite quotient");
  CVector s = CVector::Zero(p.dim());
  for (const auto& x : q.enumerate(0)) s += character(mu, q, x) * p.at(x);
  return s * q.haar_weight();
}

AtomicMeasure gamma_pair(const PCFieldModel& m, const Frequency& lambda, const Frequency& mu) {
  require_annihilator(lambda, m.subgroup());
  require_annihilator(mu, m.subgroup());
  const QuotientStructure& q = m.quotient();
  if (!q.is_finite())
    throw UndecidableError("the spectral measure of a weakly PC field is not atomic; no finite atom list exists");
  AtomicMeasure g;
  double mass = 0;
  for (const auto& x : q.enumerate(0)) mass += m.periodic().at(x).squaredNorm();
  mass *= q.haar_weight();
  for (const Frequency& nu : annihilator(q).points()) {
    CVector a = periodic_fourier(m.periodic(), nu + lambda);
    CVector b = periodic_fourier(m.periodic(), nu + mu);
    for (const auto& atom : m.unitary().atoms()) {
      Complex w = inner(atom.basis.adjoint() * a, atom.basis.adjoint() * b);
      g.add(atom.freq + nu, w);
    }
  }
  g.prune(1e-14 * mass);
  return g;
}

AtomicMeasure gamma_lambda(const PCFieldModel& m, const Frequency& lambda) {
  return gamma_pair(m, Frequency::zero(m.lattice_dim()), -lambda);
}

Complex SOSpectrum::kernel(const Point& t, const Point& s) const {
  Complex k = 0;
  for (const auto& slice : slices_)
    for (const auto& a : slice.gamma.atoms()) {
      Frequency beta = a.location - slice.lambda;
      k += std::polar(1.0, dot_phase(a.location.theta(), t) - dot_phase(beta.theta(), s)) * a.weight;
    }
  return k;
}

double SOSpectrum::variation() const {
  double v = 0;
  for (const auto& s : slices_) v += s.gamma.variation();
  return v;
}

double SOSpectrum::hyperplane_violation() const {
  double worst = 0;
  for (const auto& slice : slices_)
    for (const auto& a : slice.gamma.atoms()) {
      Frequency beta = a.location - slice.lambda;
      Frequency diff = a.location - beta;
      for (int i = 0; i < diff.dim(); ++i)
        worst = std::max(worst, angular_distance(diff[static_cast<std::size_t>(i)], slice.lambda[static_cast<std::size_t>(i)]));
    }
  return worst;
}

SOSpectrum so_spectrum(const PCFieldModel& m) {
  const QuotientStructure& q = m.quotient();
  if (!q.is_finite())
    throw UndecidableError("harmonizability undetermined: the annihilator is infinite and the slices are not atomic");
  std::vector<SpectrumSlice> slices;
  for (const Frequency& lambda : annihilator(q).points()) slices.push_back({lambda, gamma_lambda(m, lambda)});
  return SOSpectrum(std::move(slices));
}

PosdefResult posdef_check(const PCFieldModel& m, const std::vector<Frequency>& lambdas,
                          const std::vector<Point>& points, Int truncation) {
  if (lambdas.size() != points.size()) throw ContractError("need one point per frequency");
  auto n = static_cast<Eigen::Index>(lambdas.size());
  CMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto& lj = lambdas[static_cast<std::size_t>(j)];
      Point tau = sub_points(points[static_cast<std::size_t>(j)], points[static_cast<std::size_t>(k)]);
      g(j, k) = character(lj, tau) * spectral_covariance(m, lj - lambdas[static_cast<std::size_t>(k)], tau, truncation).value;
    }
  return {min_eigenvalue(g), gram_scale(g)};
}

namespace {

// Coefficient c for each (s, s+t) window pair so that â = Σ c·X(s+t)·conj(X(s)).
struct EstimatorPlan {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<Complex> coeffs;
};

EstimatorPlan estimator_plan(const Window& w, const LatticeSubgroup& k, const Frequency& lambda, const Point& t) {
  require_annihilator(lambda, k);
  if (static_cast<int>(t.size()) != k.dim()) throw ContractError("lag has the wrong dimension");
  QuotientStructure q(k);
  std::map<QuotientCoord, std::vector<std::pair<std::size_t, std::size_t>>> by_coset;
  for (std::size_t a = 0; a < w.size(); ++a) {
    auto b = w.index_of(add_points(w[a], t));
    if (b) by_coset[q.to_quotient(w[a])].emplace_back(a, *b);
  }
  if (by_coset.empty()) throw ContractError("window does not cover the requested lag");
  if (q.is_finite() && static_cast<Int>(by_coset.size()) != q.torsion_order())
    throw ContractError("window does not cover every coset at the requested lag");
  EstimatorPlan plan;
  for (const auto& [x, prs] : by_coset) {
    Complex c = q.haar_weight() * character(lambda, q, x) / static_cast<double>(prs.size());
    for (const auto& pr : prs) {
      plan.pairs.push_back(pr);
      plan.coeffs.push_back(c);
    }
  }
  return plan;
}

}  // namespace

Complex estimate_spectral_covariance(const SampleSet& paths, const LatticeSubgroup& k, const Frequency& lambda,
                                     const Point& t) {
  EstimatorPlan plan = estimator_plan(paths.window, k, lambda, t);
  Complex s = 0;
  for (std::size_t i = 0; i < plan.pairs.size(); ++i) {
    auto [a, b] = plan.pairs[i];
    auto ca = static_cast<Eigen::Index>(a), cb = static_cast<Eigen::Index>(b);
    s += plan.coeffs[i] * (paths.values.col(cb).cwiseProduct(paths.values.col(ca).conjugate())).sum();
  }
  return s / static_cast<double>(paths.values.rows());
}

double estimator_variance(const KernelFn& kernel, const Window& w, const LatticeSubgroup& k,
                          const Frequency& lambda, const Point& t) {
  EstimatorPlan plan = estimator_plan(w, k, lambda, t);
  auto n = static_cast<Eigen::Index>(w.size());
  // â = zᴴ A z with A(a,b) the coefficient of conj(z_a)·z_b.
  CMatrix a = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < plan.pairs.size(); ++i)
    a(static_cast<Eigen::Index>(plan.pairs[i].first), static_cast<Eigen::Index>(plan.pairs[i].second)) += plan.coeffs[i];
  CMatrix c = gram(kernel, w);
  return (a * c * a.adjoint() * c).trace().real();
}

}  // namespace pcf
