#include "pcfield/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "pcfield/errors.hpp"

namespace pcf {

namespace {

constexpr double kBasisTol = 1e-10;

double phase(const Frequency& chi, const Point& t) {
  double a = 0;
  for (std::size_t i = 0; i < t.size(); ++i) a += std::fmod(chi[i] * static_cast<double>(t[i]), 2 * std::numbers::pi);
  return a;
}

Int l1_free(const QuotientStructure& q, const QuotientCoord& x) {
  Int s = 0;
  for (std::size_t i = q.torsion().size(); i < x.size(); ++i) s = checked_add(s, std::abs(x[i]));
  return s;
}

QuotientCoord torsion_part(const QuotientStructure& q, const QuotientCoord& x) {
  return QuotientCoord(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(q.torsion().size()));
}

// Σ_{|l| ≤ L} ρ^{2|l|} over l ∈ ℤ; L < 0 means the empty sum.
double line_sum(double rho, Int radius) {
  if (radius < 0) return 0;
  double r2 = rho * rho;
  return 1 + 2 * r2 * (1 - std::pow(r2, static_cast<double>(radius))) / (1 - r2);
}

}  // namespace

UnitaryRep::UnitaryRep(int lattice_dim, int dim, std::vector<SpectralAtom> atoms)
    : lattice_dim_(lattice_dim), dim_(dim), atoms_(std::move(atoms)) {
  if (lattice_dim < 1 || dim < 1) throw ContractError("unitary representation needs positive dimensions");
  Eigen::Index total = 0;
  for (const auto& a : atoms_) {
    if (a.freq.dim() != lattice_dim) throw ContractError("atom frequency has the wrong lattice dimension");
    if (a.basis.rows() != dim || a.basis.cols() < 1) throw ContractError("atom basis has the wrong shape");
    total += a.basis.cols();
  }
  if (total != dim) throw ContractError("atom bases do not span the space");
  for (std::size_t i = 0; i < atoms_.size(); ++i)
    for (std::size_t j = i + 1; j < atoms_.size(); ++j)
      if (atoms_[i].freq.near(atoms_[j].freq)) throw ContractError("two atoms share a frequency");
  CMatrix all(dim, dim);
  Eigen::Index col = 0;
  for (const auto& a : atoms_) {
    all.middleCols(col, a.basis.cols()) = a.basis;
    col += a.basis.cols();
  }
  double err = (all.adjoint() * all - CMatrix::Identity(dim, dim)).cwiseAbs().maxCoeff();
  if (err > kBasisTol) throw ContractError("atom bases are not orthonormal (error " + std::to_string(err) + ")");
  for (const auto& a : atoms_) projections_.push_back(a.basis * a.basis.adjoint());
}

UnitaryRep UnitaryRep::trivial(int lattice_dim, int dim) {
  return UnitaryRep(lattice_dim, dim, {SpectralAtom{Frequency::zero(lattice_dim), CMatrix::Identity(dim, dim)}});
}

UnitaryRep UnitaryRep::diagonal(const std::vector<Frequency>& freqs) {
  if (freqs.empty()) throw ContractError("diagonal representation needs at least one frequency");
  int d = static_cast<int>(freqs.size());
  std::vector<SpectralAtom> atoms;
  for (int j = 0; j < d; ++j) atoms.push_back({freqs[static_cast<std::size_t>(j)], CMatrix::Identity(d, d).col(j)});
  return UnitaryRep(freqs.front().dim(), d, std::move(atoms));
}

CMatrix UnitaryRep::power(const Point& t) const {
  CMatrix m = CMatrix::Zero(dim_, dim_);
  for (std::size_t j = 0; j < atoms_.size(); ++j) m += std::polar(1.0, phase(atoms_[j].freq, t)) * projections_[j];
  return m;
}

CVector UnitaryRep::apply(const Point& t, const CVector& v) const {
  CVector out = CVector::Zero(dim_);
  for (const auto& a : atoms_) out += std::polar(1.0, phase(a.freq, t)) * (a.basis * (a.basis.adjoint() * v));
  return out;
}

double envelope_tail(const QuotientStructure& q, const Envelope& e, Int radius) {
  int f = q.free_rank();
  if (f == 0) return radius >= 0 ? 0.0 : static_cast<double>(q.torsion_order()) * e.amplitude * e.amplitude;
  if (e.rho >= 1) return std::numeric_limits<double>::infinity();
  double r2 = e.rho * e.rho;
  double s_inf = (1 + r2) / (1 - r2);
  double s_l = line_sum(e.rho, radius);
  double gap = radius < 0 ? s_inf : 2 * std::pow(r2, static_cast<double>(radius + 1)) / (1 - r2);
  // S∞^f − S_L^f = (S∞ − S_L)·Σ_k S∞^k S_L^{f−1−k}, avoiding cancellation.
  double sum = 0;
  for (int k = 0; k < f; ++k) sum += std::pow(s_inf, k) * std::pow(s_l, f - 1 - k);
  return static_cast<double>(q.torsion_order()) * e.amplitude * e.amplitude * gap * sum;
}

double envelope_total(const QuotientStructure& q, const Envelope& e) { return envelope_tail(q, e, -1); }

PeriodicField PeriodicField::from_table(QuotientStructure q, int dim, std::map<QuotientCoord, CVector> values,
                                        std::optional<Envelope> envelope) {
  PeriodicField p(std::move(q), dim, Kind::Table);
  Int radius = 0;
  for (auto& [x, v] : values) {
    if (static_cast<int>(x.size()) != p.q_.coord_size()) throw ContractError("quotient coordinate has the wrong length");
    if (v.size() != dim) throw ContractError("periodic value has the wrong dimension");
    QuotientCoord c = p.q_.to_quotient(p.q_.section(x));
    if (c != x) throw ContractError("quotient coordinate out of range");
    radius = std::max(radius, p.q_.free_norm(x));
  }
  p.table_ = std::move(values);
  p.support_radius_ = radius;
  p.envelope_ = envelope;
  return p;
}

PeriodicField PeriodicField::geometric(QuotientStructure q, std::map<QuotientCoord, CVector> profile, double rho) {
  if (!(rho >= 0 && rho < 1)) throw ContractError("geometric decay needs 0 <= rho < 1");
  if (profile.empty()) throw ContractError("geometric field needs a profile");
  int dim = static_cast<int>(profile.begin()->second.size());
  PeriodicField p(std::move(q), dim, Kind::Geometric);
  double amp2 = 0;
  for (auto& [j, v] : profile) {
    if (j.size() != p.q_.torsion().size()) throw ContractError("profile key must list torsion residues only");
    for (std::size_t i = 0; i < j.size(); ++i)
      if (j[i] < 0 || j[i] >= p.q_.torsion()[i]) throw ContractError("torsion residue out of range");
    if (v.size() != dim) throw ContractError("profile vectors differ in dimension");
    amp2 = std::max(amp2, v.squaredNorm());
  }
  p.table_ = std::move(profile);
  p.rho_ = rho;
  if (p.q_.is_finite()) p.support_radius_ = 0;
  p.envelope_ = Envelope{std::sqrt(amp2), rho};
  return p;
}

PeriodicField PeriodicField::from_function(QuotientStructure q, int dim, Generator g, std::optional<Envelope> envelope,
                                           std::optional<Int> support_radius) {
  PeriodicField p(std::move(q), dim, Kind::Function);
  p.generator_ = std::move(g);
  p.envelope_ = envelope;
  p.support_radius_ = p.q_.is_finite() ? std::optional<Int>(0) : support_radius;
  return p;
}

PeriodicField PeriodicField::constant(QuotientStructure q, const CVector& v) {
  std::optional<Envelope> env;
  if (!q.is_finite()) env = Envelope{v.norm(), 1.0};
  return from_function(std::move(q), static_cast<int>(v.size()), [v](const QuotientCoord&) { return v; }, env);
}

CVector PeriodicField::at(const QuotientCoord& x) const {
  switch (kind_) {
    case Kind::Table: {
      auto it = table_.find(x);
      return it == table_.end() ? CVector(CVector::Zero(dim_)) : it->second;
    }
    case Kind::Geometric: {
      auto it = table_.find(torsion_part(q_, x));
      if (it == table_.end()) return CVector::Zero(dim_);
      return std::pow(rho_, static_cast<double>(l1_free(q_, x))) * it->second;
    }
    case Kind::Function:
      break;
  }
  CVector v = generator_(x);
  if (v.size() != dim_) throw ContractError("periodic field generator returned the wrong dimension");
  return v;
}

double PeriodicField::tail_mass(Int radius) const {
  if (q_.is_finite()) return 0;
  if (kind_ == Kind::Table) {
    double s = 0;
    for (const auto& [x, v] : table_)
      if (q_.free_norm(x) > radius) s += v.squaredNorm();
    return s;
  }
  if (support_radius_ && *support_radius_ <= radius) return 0;
  if (kind_ == Kind::Geometric) {
    double prof = 0;
    for (const auto& [j, v] : table_) prof += v.squaredNorm();
    // Exact: the profile mass times the free-part geometric tail.
    return envelope_tail(q_, Envelope{std::sqrt(prof / static_cast<double>(q_.torsion_order())), rho_}, radius);
  }
  if (envelope_) return envelope_tail(q_, *envelope_, radius);
  return std::numeric_limits<double>::infinity();
}

std::vector<QuotientCoord> summation_points(const PeriodicField& p, Int truncation) {
  const QuotientStructure& q = p.quotient();
  if (q.is_finite()) return q.enumerate(0);
  if (p.kind() == PeriodicField::Kind::Table) {
    std::vector<QuotientCoord> pts;
    for (const auto& [x, v] : p.table())
      if (q.free_norm(x) <= truncation) pts.push_back(x);
    return pts;
  }
  if (!p.summable_info())
    throw UndecidableError("sum over an infinite quotient needs a finite support or a decay envelope");
  Int r = truncation;
  if (p.support_radius()) r = std::min(r, *p.support_radius());
  return q.enumerate(r);
}

PCFieldModel::PCFieldModel(UnitaryRep u, PeriodicField p) : u_(std::move(u)), p_(std::move(p)) {
  if (u_.dim() != p_.dim()) throw ContractError("unitary representation and periodic field differ in dimension");
  if (u_.lattice_dim() != p_.quotient().dim()) throw ContractError("lattice dimensions differ");
}

CVector PCFieldModel::eval(const Point& t) const { return u_.apply(t, p_.at_point(t)); }

Complex PCFieldModel::kernel(const Point& t, const Point& s) const { return inner(eval(t), eval(s)); }

KernelFn PCFieldModel::kernel_fn() const {
  return [m = *this](const Point& t, const Point& s) { return m.kernel(t, s); };
}

Complex PCFieldModel::b(const Point& t, const Point& s, const QuotientCoord& x) const {
  Point u = quotient().section(x);
  return kernel(add_points(t, u), add_points(s, u));
}

Complex PCFieldModel::big_b(const Point& t, const QuotientCoord& x) const {
  return b(t, Point(t.size(), 0), x);
}

PCFieldModel make_model(UnitaryRep u, PeriodicField p) { return PCFieldModel(std::move(u), std::move(p)); }

PCFieldModel stationary_model(UnitaryRep u, const CVector& p) {
  QuotientStructure q(LatticeSubgroup::full(u.lattice_dim()));
  return PCFieldModel(std::move(u), PeriodicField::constant(std::move(q), p));
}

namespace {

void require_stationary(const PCFieldModel& y) {
  if (y.quotient().coord_size() != 0) throw ContractError("base model must be stationary (K = Z^n)");
}

void require_same_dim(const LatticeSubgroup& k, const PCFieldModel& y, const Window& check) {
  if (k.dim() != y.lattice_dim()) throw ContractError("period subgroup and model differ in lattice dimension");
  if (check.size() == 0) throw ContractError("periodicity check window is empty");
  if (check.dim() != k.dim()) throw ContractError("check window has the wrong dimension");
}

}  // namespace

PCFieldModel amplitude_modulated(const std::function<Complex(const Point&)>& f, const LatticeSubgroup& k,
                                 const PCFieldModel& y, const Window& check, std::optional<Envelope> decay) {
  require_stationary(y);
  require_same_dim(k, y, check);
  for (const Point& t : check.points()) {
    Complex ft = f(t);
    for (int g = 0; g < k.generator_count(); ++g) {
      double err = std::abs(f(add_points(t, k.generator(g))) - ft);
      if (err > 1e-10 * (1 + std::abs(ft)))
        throw DomainError("modulation is not periodic under the given subgroup");
    }
  }
  QuotientStructure q(k);
  CVector p = y.periodic().at(QuotientCoord{});
  if (q.is_finite()) {
    std::map<QuotientCoord, CVector> values;
    for (const auto& x : q.enumerate(0)) values[x] = f(q.section(x)) * p;
    return PCFieldModel(y.unitary(), PeriodicField::from_table(std::move(q), y.dim(), std::move(values)));
  }
  std::optional<Envelope> env;
  if (decay) {
    env = Envelope{decay->amplitude * p.norm(), decay->rho};
    for (const auto& x : q.enumerate(6)) {
      double bound = env->amplitude * std::pow(env->rho, static_cast<double>(l1_free(q, x)));
      if (std::abs(f(q.section(x))) * p.norm() > bound * (1 + 1e-12) + 1e-300)
        throw DomainError("modulation exceeds its declared decay envelope");
    }
  }
  auto section = [q](const QuotientCoord& x) { return q.section(x); };
  PeriodicField pf = PeriodicField::from_function(
      q, y.dim(), [f, p, section](const QuotientCoord& x) { return CVector(f(section(x)) * p); }, env);
  return PCFieldModel(y.unitary(), std::move(pf));
}

PCFieldModel time_deformed(const std::function<std::vector<double>(const Point&)>& f, const LatticeSubgroup& k,
                           const PCFieldModel& y, const Window& check) {
  require_stationary(y);
  require_same_dim(k, y, check);
  auto integral = [f, n = k.dim()](const Point& t) {
    std::vector<double> v = f(t);
    if (static_cast<int>(v.size()) != n) throw ContractError("deformation has the wrong dimension");
    Point out;
    for (double c : v) {
      double r = std::round(c);
      if (std::abs(c - r) > 1e-12 || std::abs(r) > 9e15) throw DomainError("deformation is not integer-valued");
      out.push_back(static_cast<Int>(r));
    }
    return out;
  };
  for (const Point& t : check.points()) {
    Point ft = integral(t);
    for (int g = 0; g < k.generator_count(); ++g)
      if (integral(add_points(t, k.generator(g))) != ft)
        throw DomainError("deformation is not periodic under the given subgroup");
  }
  QuotientStructure q(k);
  CVector p = y.periodic().at(QuotientCoord{});
  const UnitaryRep& u = y.unitary();
  if (q.is_finite()) {
    std::map<QuotientCoord, CVector> values;
    for (const auto& x : q.enumerate(0)) values[x] = u.apply(integral(q.section(x)), p);
    return PCFieldModel(u, PeriodicField::from_table(std::move(q), y.dim(), std::move(values)));
  }
  auto gen = [p, u, q, integral](const QuotientCoord& x) { return u.apply(integral(q.section(x)), p); };
  PeriodicField pf = PeriodicField::from_function(q, y.dim(), gen, Envelope{p.norm(), 1.0});
  return PCFieldModel(u, std::move(pf));
}

double k_pc_violation(const KernelFn& kernel, const LatticeSubgroup& k, const Window& w) {
  double worst = 0;
  for (int g = 0; g < k.generator_count(); ++g) {
    Point kg = k.generator(g);
    for (const Point& t : w.points()) {
      Point tk = add_points(t, kg);
      for (const Point& s : w.points())
        worst = std::max(worst, std::abs(kernel(tk, add_points(s, kg)) - kernel(t, s)));
    }
  }
  return worst;
}

CMatrix gram(const KernelFn& kernel, const Window& w) {
  auto n = static_cast<Eigen::Index>(w.size());
  CMatrix g(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      g(a, b) = kernel(w[static_cast<std::size_t>(a)], w[static_cast<std::size_t>(b)]);
  return g;
}

double gram_scale(const CMatrix& g) {
  double s = 0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) s = std::max(s, std::abs(g(i, i)));
  return s;
}

double hermitian_violation(const CMatrix& g) {
  if (g.size() == 0) return 0;
  return (g - g.adjoint()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const CMatrix& g) {
  if (g.size() == 0) return 0;
  CMatrix h = (g + g.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

SquareIntegrability is_square_integrable(const PCFieldModel& m, Int truncation) {
  const PeriodicField& p = m.periodic();
  SquareIntegrability r;
  for (const auto& x : summation_points(p, truncation)) r.value += p.at(x).squaredNorm();
  r.tail_bound = p.tail_mass(truncation);
  r.finite = std::isfinite(r.tail_bound);
  r.haar_value = r.value * m.quotient().haar_weight();
  return r;
}

SampleSet sample_paths(const KernelFn& kernel, const Window& w, int count, std::uint64_t seed) {
  if (count < 1) throw ContractError("sample count must be positive");
  if (w.size() == 0) throw ContractError("sampling window is empty");
  CMatrix g = gram(kernel, w);
  double scale = gram_scale(g);
  double herm = hermitian_violation(g);
  if (herm > 1e-9 * std::max(scale, 1.0)) throw NumericalError("kernel is not Hermitian on the window", herm);
  CMatrix h = (g + g.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  double lo = es.eigenvalues().minCoeff();
  if (lo < -1e-9 * scale) throw NumericalError("kernel is not positive semidefinite on the window", -lo);
  Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  CMatrix factor = es.eigenvectors() * root.asDiagonal();

  auto n = static_cast<Eigen::Index>(w.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMatrix z(n, count);
  for (int c = 0; c < count; ++c)
    for (Eigen::Index i = 0; i < n; ++i) {
      double re = normal(rng);
      double im = normal(rng);
      z(i, c) = Complex(re, im);
    }
  return SampleSet{w, (factor * z).transpose()};
}

}  // namespace pcf
