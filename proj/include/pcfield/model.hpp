#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pcfield/lattice.hpp"

namespace pcf {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// (u, v) = Σ uᵢ·conj(vᵢ): linear in the first slot.
inline Complex inner(const CVector& u, const CVector& v) { return v.dot(u); }

/// One spectral atom of a unitary representation: a frequency χ and an
/// orthonormal basis (columns) of its eigenspace.
struct SpectralAtom {
  Frequency freq;
  CMatrix basis;
};

/// An atomic unitary representation of ℤⁿ on ℂᴰ,
/// Uᵗ = Σⱼ e^{+iχⱼ·t} Projⱼ.
class UnitaryRep {
 public:
  /// Validates orthonormality of each basis, mutual orthogonality and
  /// completeness (Σ Projⱼ = I within 1e-10).
  UnitaryRep(int lattice_dim, int dim, std::vector<SpectralAtom> atoms);

  /// Single atom at χ = 0 spanning ℂᴰ.
  static UnitaryRep trivial(int lattice_dim, int dim);

  /// Diagonal representation: one rank-1 atom per frequency on the standard basis.
  static UnitaryRep diagonal(const std::vector<Frequency>& freqs);

  int lattice_dim() const { return lattice_dim_; }
  int dim() const { return dim_; }
  const std::vector<SpectralAtom>& atoms() const { return atoms_; }
  const CMatrix& projection(std::size_t j) const { return projections_[j]; }

  CMatrix power(const Point& t) const;
  CVector apply(const Point& t, const CVector& v) const;

 private:
  int lattice_dim_;
  int dim_;
  std::vector<SpectralAtom> atoms_;
  std::vector<CMatrix> projections_;
};

/// Declared decay of a periodic field on an infinite quotient:
/// ‖P_K(x)‖ ≤ amplitude·rho^{|free(x)|₁}.
struct Envelope {
  double amplitude = 1.0;
  double rho = 0.5;
};

/// Sum over all quotient points with |free(x)|∞ > radius of amplitude²·rho^{2|free(x)|₁},
/// times the torsion order (counting measure). +∞ when rho ≥ 1.
double envelope_tail(const QuotientStructure& q, const Envelope& e, Int radius);

/// The same sum over all quotient points.
double envelope_total(const QuotientStructure& q, const Envelope& e);

/// A K-periodic ℂᴰ-valued field, stored through P_K on the quotient.
class PeriodicField {
 public:
  using Generator = std::function<CVector(const QuotientCoord&)>;
  enum class Kind { Table, Geometric, Function };

  /// Values on listed quotient points, zero elsewhere.
  static PeriodicField from_table(QuotientStructure q, int dim, std::map<QuotientCoord, CVector> values,
                                  std::optional<Envelope> envelope = std::nullopt);

  /// P_K(j, l) = rho^{|l|₁}·profile(j) over torsion residues j and free l.
  static PeriodicField geometric(QuotientStructure q, std::map<QuotientCoord, CVector> profile, double rho);

  /// Arbitrary values. Without an envelope (or finite support radius) sums
  /// over an infinite quotient are undecidable.
  static PeriodicField from_function(QuotientStructure q, int dim, Generator g,
                                     std::optional<Envelope> envelope = std::nullopt,
                                     std::optional<Int> support_radius = std::nullopt);

  /// The same vector at every quotient point.
  static PeriodicField constant(QuotientStructure q, const CVector& v);

  const QuotientStructure& quotient() const { return q_; }
  int dim() const { return dim_; }
  Kind kind() const { return kind_; }

  CVector at(const QuotientCoord& x) const;
  CVector at_point(const Point& t) const { return at(q_.to_quotient(t)); }

  /// Finite support: P_K vanishes when |free(x)|∞ > radius. Always 0 for a
  /// finite quotient.
  std::optional<Int> support_radius() const { return support_radius_; }
  const std::optional<Envelope>& envelope() const { return envelope_; }
  /// Decay rate of a Geometric field.
  double rho() const { return rho_; }

  /// Table entries (Table kind) or torsion profile (Geometric kind).
  const std::map<QuotientCoord, CVector>& table() const { return table_; }

  /// Upper bound on Σ_{|free(x)|∞ > radius} ‖P_K(x)‖², counting measure.
  double tail_mass(Int radius) const;

  /// True when sums over the quotient can be bounded (finite quotient,
  /// finite support, or a declared envelope).
  bool summable_info() const { return support_radius_.has_value() || envelope_.has_value(); }

 private:
  PeriodicField(QuotientStructure q, int dim, Kind kind) : q_(std::move(q)), dim_(dim), kind_(kind) {}

  QuotientStructure q_;
  int dim_;
  Kind kind_;
  std::map<QuotientCoord, CVector> table_;
  Generator generator_;
  double rho_ = 0;
  std::optional<Envelope> envelope_;
  std::optional<Int> support_radius_;
};

using KernelFn = std::function<Complex(const Point&, const Point&)>;

/// A PC field in generative form X(t) = Uᵗ P(t).
class PCFieldModel {
 public:
  PCFieldModel(UnitaryRep u, PeriodicField p);

  const UnitaryRep& unitary() const { return u_; }
  const PeriodicField& periodic() const { return p_; }
  const QuotientStructure& quotient() const { return p_.quotient(); }
  const LatticeSubgroup& subgroup() const { return p_.quotient().subgroup(); }
  int lattice_dim() const { return u_.lattice_dim(); }
  int dim() const { return u_.dim(); }

  CVector eval(const Point& t) const;

  /// 𝔎_X(t,s) = (X(t), X(s)).
  Complex kernel(const Point& t, const Point& s) const;
  KernelFn kernel_fn() const;

  /// b_X(t,s;x) = 𝔎_X(t+ξ(x), s+ξ(x)).
  Complex b(const Point& t, const Point& s, const QuotientCoord& x) const;
  /// B_X(t;x) = b_X(t,0;x).
  Complex big_b(const Point& t, const QuotientCoord& x) const;

 private:
  UnitaryRep u_;
  PeriodicField p_;
};

/// Checks dimensions and builds X(t) = Uᵗ P(t).
PCFieldModel make_model(UnitaryRep u, PeriodicField p);

/// Stationary model on ℤⁿ: K = ℤⁿ and P ≡ p.
PCFieldModel stationary_model(UnitaryRep u, const CVector& p);

/// X(t) = f(t)·Y(t) for a stationary Y and a K-periodic scalar f. K-periodicity
/// of f is verified on `check`. For an infinite quotient pass `decay`, the
/// envelope of |f| on the quotient; it is scaled by ‖p_Y‖.
PCFieldModel amplitude_modulated(const std::function<Complex(const Point&)>& f, const LatticeSubgroup& k,
                                 const PCFieldModel& y, const Window& check,
                                 std::optional<Envelope> decay = std::nullopt);

/// X(t) = Y(t + f(t)) for a stationary Y and an integer-valued K-periodic f.
PCFieldModel time_deformed(const std::function<std::vector<double>(const Point&)>& f, const LatticeSubgroup& k,
                           const PCFieldModel& y, const Window& check);

/// Max |𝔎(t+k, s+k) − 𝔎(t,s)| over window pairs and generators k.
double k_pc_violation(const KernelFn& kernel, const LatticeSubgroup& k, const Window& w);

/// Gram matrix G(a,b) = 𝔎(w[a], w[b]).
CMatrix gram(const KernelFn& kernel, const Window& w);

/// Largest diagonal entry, the scale for relative tolerances.
double gram_scale(const CMatrix& g);

/// Max |G − Gᴴ|.
double hermitian_violation(const CMatrix& g);

/// Smallest eigenvalue of the Hermitian part.
double min_eigenvalue(const CMatrix& g);

struct SquareIntegrability {
  bool finite = false;
  double value = 0;       // Σ_x B_X(0;x), counting measure
  double haar_value = 0;  // the same sum against the Haar measure of the quotient
  double tail_bound = 0;  // bound on the part beyond the truncation
};

/// Σ_x B_X(0;x) over the quotient. Exact on finite quotients and finitely
/// supported fields; truncated at `truncation` with an envelope tail bound
/// otherwise. Throws UndecidableError when no decay information exists.
SquareIntegrability is_square_integrable(const PCFieldModel& m, Int truncation = 64);

/// Quotient points a sum must visit (all of them when the support is finite)
/// and the tail mass left outside. Throws UndecidableError if unbounded.
std::vector<QuotientCoord> summation_points(const PeriodicField& p, Int truncation);

/// Zero-mean circular complex Gaussian draws on a window.
struct SampleSet {
  Window window;
  CMatrix values;  // count × |window|
};

/// Draws `count` realizations with covariance 𝔎 on the window, factoring the
/// Gram matrix by a Hermitian eigendecomposition with eigenvalues floored at
/// 0. Throws NumericalError if the Gram matrix has an eigenvalue below
/// −1e-9·scale.
SampleSet sample_paths(const KernelFn& kernel, const Window& w, int count, std::uint64_t seed);

}  // namespace pcf
