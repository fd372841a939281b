#include "pcfield/structure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "pcfield/errors.hpp"
#include "pcfield/spectra.hpp"

namespace pcf {

namespace {

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void fix_gauge(CMatrix& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    double top = basis.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < basis.rows(); ++r) {
      if (std::abs(basis(r, c)) > 1e-8 * top) {
        basis.col(c) *= std::conj(basis(r, c)) / std::abs(basis(r, c));
        basis(r, c) = std::abs(basis(r, c));
        break;
      }
    }
  }
}

// Unitary V on ℂʳ with V·xs ≈ ys: polar-corrected on span(xs), completed by
// mapping the complement of span(xs) onto the complement of span(ys).
CMatrix shift_operator(const CMatrix& xs, const CMatrix& ys) {
  auto r = xs.rows();
  Eigen::JacobiSVD<CMatrix> svd(xs, Eigen::ComputeFullU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::Index rho = 0;
  double top = sv.size() ? sv(0) : 0.0;
  while (rho < sv.size() && sv(rho) > 1e-9 * top) ++rho;
  CMatrix us = svd.matrixU();
  CMatrix w(r, rho);
  if (rho > 0) {
    CMatrix a = ys * svd.matrixV().leftCols(rho) * sv.head(rho).cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<CMatrix> polar(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    w = polar.matrixU() * polar.matrixV().adjoint();
  }
  CMatrix qt = CMatrix::Identity(r, r);
  if (rho > 0) {
    Eigen::HouseholderQR<CMatrix> qr(w);
    qt = qr.householderQ() * CMatrix::Identity(r, r);
  }
  CMatrix v = CMatrix::Zero(r, r);
  if (rho > 0) v += w * us.leftCols(rho).adjoint();
  if (rho < r) v += qt.rightCols(r - rho) * us.rightCols(r - rho).adjoint();
  return v;
}

std::vector<JointEigenspace> joint_diagonalize(const std::vector<CMatrix>& ops, const ShiftOptions& opt) {
  auto r = ops.front().rows();
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  CMatrix h = CMatrix::Zero(r, r);
  for (const auto& v : ops) {
    double c = coef(rng), d = coef(rng);
    h += c * (v + v.adjoint()) / 2.0 + d * (v - v.adjoint()) / Complex(0, 2);
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es((h + h.adjoint()) / 2.0);
  const auto& ev = es.eigenvalues();
  std::vector<JointEigenspace> spaces;
  Eigen::Index start = 0;
  while (start < r) {
    Eigen::Index end = start + 1;
    while (end < r && ev(end) - ev(end - 1) <= opt.phase_tol) ++end;
    CMatrix qc = es.eigenvectors().middleCols(start, end - start);
    JointEigenspace s;
    for (const auto& v : ops) {
      CMatrix m = qc.adjoint() * v * qc;
      Complex mean = m.trace() / static_cast<double>(m.rows());
      double phi = wrap_angle(std::arg(mean));
      CMatrix resid = v * qc - std::polar(1.0, phi) * qc;
      double err = max_abs(resid);
      if (err > 10 * opt.phase_tol)
        throw NumericalError("joint eigenphases are ambiguous beyond the clustering tolerance", err);
      s.phases.push_back(phi);
    }
    s.basis = qc;
    fix_gauge(s.basis);
    spaces.push_back(std::move(s));
    start = end;
  }
  return spaces;
}

}  // namespace

HilbertEmbedding embed(const CMatrix& gram, const Window& w, double rank_tol) {
  auto n = static_cast<Eigen::Index>(w.size());
  if (n == 0) throw ContractError("embedding window is empty");
  if (gram.rows() != n || gram.cols() != n) throw ContractError("Gram matrix does not match the window");
  double scale = gram_scale(gram);
  double herm = hermitian_violation(gram);
  if (herm > 1e-9 * scale) throw NumericalError("kernel is not Hermitian on the window", herm);
  Eigen::SelfAdjointEigenSolver<CMatrix> es((gram + gram.adjoint()) / 2.0);
  const auto& ev = es.eigenvalues();
  double top = ev(n - 1);
  if (ev(0) < -1e-9 * scale) throw NumericalError("kernel is not positive semidefinite on the window", -ev(0));
  Eigen::Index rank = 0;
  while (rank < n && ev(n - 1 - rank) > rank_tol * top) ++rank;
  rank = std::max<Eigen::Index>(rank, 1);
  HilbertEmbedding e{w, CMatrix(n, rank), 0, scale};
  for (Eigen::Index k = 0; k < rank; ++k)
    e.vectors.col(k) = es.eigenvectors().col(n - 1 - k) * std::sqrt(std::max(ev(n - 1 - k), 0.0));
  e.gram_error = max_abs(e.vectors * e.vectors.adjoint() - gram);
  return e;
}

HilbertEmbedding embed(const KernelFn& kernel, const Window& w, double rank_tol) {
  return embed(gram(kernel, w), w, rank_tol);
}

ShiftSystem k_shift(const HilbertEmbedding& emb, const LatticeSubgroup& k, const ShiftOptions& opt) {
  if (k.dim() != emb.window.dim()) throw ContractError("period subgroup and window differ in dimension");
  const Window& w = emb.window;
  std::size_t need = opt.min_overlap ? opt.min_overlap : static_cast<std::size_t>(emb.rank());
  ShiftSystem sys;
  for (int g = 0; g < k.generator_count(); ++g) {
    Point kg = k.generator(g);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < w.size(); ++a)
      if (auto b = w.index_of(add_points(w[a], kg))) pairs.emplace_back(a, *b);
    if (pairs.size() < need || pairs.empty())
      throw ContractError("window overlaps its shift by a generator in too few points");
    auto m = static_cast<Eigen::Index>(pairs.size());
    CMatrix xs(emb.rank(), m), ys(emb.rank(), m);
    for (Eigen::Index i = 0; i < m; ++i) {
      xs.col(i) = emb.at(pairs[static_cast<std::size_t>(i)].first);
      ys.col(i) = emb.at(pairs[static_cast<std::size_t>(i)].second);
    }
    double iso = max_abs(xs.adjoint() * xs - ys.adjoint() * ys);
    sys.isometry_violation = std::max(sys.isometry_violation, iso);
    if (iso > opt.isometry_tol * std::max(emb.scale, 1e-300))
      throw NumericalError("kernel is not periodically correlated under the given subgroup", iso);
    CMatrix v = shift_operator(xs, ys);
    sys.overlap_residual = std::max(sys.overlap_residual, max_abs(v * xs - ys));
    sys.unitarity = std::max(sys.unitarity, max_abs(v.adjoint() * v - CMatrix::Identity(v.rows(), v.cols())));
    sys.generators.push_back(kg);
    sys.ops.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < sys.ops.size(); ++i)
    for (std::size_t j = i + 1; j < sys.ops.size(); ++j)
      sys.commutator = std::max(sys.commutator, max_abs(sys.ops[i] * sys.ops[j] - sys.ops[j] * sys.ops[i]));
  sys.spaces = joint_diagonalize(sys.ops, opt);
  return sys;
}

UnitaryRep lift_and_extend(const ShiftSystem& shifts, const LatticeSubgroup& k) {
  if (shifts.spaces.empty()) throw ContractError("shift system has no eigenspaces");
  SmithForm f = smith_normal_form(k.generators());
  int n = k.dim();
  auto rows = f.s.rows();
  std::vector<SpectralAtom> atoms;
  for (const auto& sp : shifts.spaces) {
    std::vector<double> nu(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < rows; ++i) {
      double y = 0, weight = 0;
      for (Eigen::Index j = 0; j < rows; ++j) {
        y += static_cast<double>(f.u(i, j)) * sp.phases[static_cast<std::size_t>(j)];
        weight += std::abs(static_cast<double>(f.u(i, j)));
      }
      Int d = i < n ? f.s(i, i) : 0;
      if (d == 0) {
        double off = angular_distance(wrap_angle(y), 0.0);
        if (off > 1e-6 * std::max(weight, 1.0))
          throw NumericalError("eigenphases are inconsistent with the relations among the generators", off);
      } else {
        nu[static_cast<std::size_t>(i)] = wrap_angle(y) / static_cast<double>(d);
      }
    }
    std::vector<double> chi(static_cast<std::size_t>(n), 0.0);
    for (int a = 0; a < n; ++a) {
      double c = 0;
      for (int i = 0; i < n; ++i) c += static_cast<double>(f.v(a, i)) * nu[static_cast<std::size_t>(i)];
      chi[static_cast<std::size_t>(a)] = wrap_angle(c);
    }
    Frequency fr(chi);
    auto same = std::find_if(atoms.begin(), atoms.end(), [&](const SpectralAtom& at) { return at.freq.near(fr); });
    if (same != atoms.end()) {
      CMatrix merged(sp.basis.rows(), same->basis.cols() + sp.basis.cols());
      merged << same->basis, sp.basis;
      same->basis = merged;
    } else {
      atoms.push_back({fr, sp.basis});
    }
  }
  auto dim = static_cast<int>(shifts.spaces.front().basis.rows());
  return UnitaryRep(n, dim, std::move(atoms));
}

double shift_agreement(const UnitaryRep& u, const ShiftSystem& shifts) {
  double worst = 0;
  for (std::size_t i = 0; i < shifts.ops.size(); ++i)
    worst = std::max(worst, max_abs(u.power(shifts.generators[i]) - shifts.ops[i]));
  return worst;
}

PeriodicPart periodic_part(const HilbertEmbedding& emb, const UnitaryRep& u, const LatticeSubgroup& k) {
  QuotientStructure q(k);
  std::map<QuotientCoord, CVector> table;
  double worst = 0;
  for (std::size_t a = 0; a < emb.window.size(); ++a) {
    const Point& t = emb.window[a];
    Point minus(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) minus[i] = -t[i];
    CVector p = u.apply(minus, emb.at(a));
    auto [it, fresh] = table.emplace(q.to_quotient(t), p);
    if (!fresh) worst = std::max(worst, (p - it->second).norm());
  }
  return {PeriodicField::from_table(std::move(q), emb.rank(), std::move(table)), worst};
}

GladyshevComponents::GladyshevComponents(const PCFieldModel& m) : u_(m.unitary()) {
  const QuotientStructure& q = m.quotient();
  if (!q.is_finite()) throw UndecidableError("Gladyshev components need a finite annihilator");
  lambdas_ = annihilator(q).points();
  for (const auto& l : lambdas_) coeffs_.push_back(periodic_fourier(m.periodic(), l));
}

CVector GladyshevComponents::component(std::size_t i, const Point& t) const { return u_.apply(t, coeffs_[i]); }

CVector GladyshevComponents::reconstruct(const Point& t) const {
  CVector x = CVector::Zero(u_.dim());
  for (std::size_t i = 0; i < lambdas_.size(); ++i) x += std::conj(character(lambdas_[i], t)) * component(i, t);
  return x;
}

GladyshevComponents gladyshev_components(const PCFieldModel& m) { return GladyshevComponents(m); }

Decomposition decompose(const CMatrix& g, const Window& w, const LatticeSubgroup& k, const ShiftOptions& opt) {
  HilbertEmbedding emb = embed(g, w);
  ShiftSystem sys = k_shift(emb, k, opt);
  UnitaryRep u = lift_and_extend(sys, k);
  PeriodicPart pp = periodic_part(emb, u, k);
  PCFieldModel model = make_model(u, pp.field);

  DecompositionReport rep;
  rep.rank = emb.rank();
  rep.scale = emb.scale;
  double s = std::max(emb.scale, 1e-300);
  rep.gram_error = emb.gram_error / s;
  rep.overlap_residual = sys.overlap_residual / std::sqrt(s);
  rep.isometry_violation = sys.isometry_violation / s;
  rep.commutator = sys.commutator;
  rep.unitarity = sys.unitarity;
  rep.shift_agreement = shift_agreement(u, sys);
  rep.periodicity = pp.periodicity / std::sqrt(s);
  for (std::size_t a = 0; a < w.size(); ++a)
    for (std::size_t b = 0; b < w.size(); ++b)
      rep.roundtrip = std::max(rep.roundtrip, std::abs(model.kernel(w[a], w[b]) -
                                                       g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))));
  rep.roundtrip /= s;
  return {std::move(emb), std::move(sys), std::move(model), rep};
}

Decomposition decompose(const KernelFn& kernel, const Window& w, const LatticeSubgroup& k, const ShiftOptions& opt) {
  return decompose(gram(kernel, w), w, k, opt);
}

}  // namespace pcf
