#pragma once

#include <utility>
#include <vector>

#include "pcfield/lattice.hpp"
#include "pcfield/model.hpp"

namespace pcf {

/// A value computed from a (possibly truncated) quotient sum, with a bound on
/// the part left out.
struct SpectralValue {
  Complex value;
  double tail_bound = 0;
};

/// Throws DomainError unless λ ∈ Λ_K.
void require_annihilator(const Frequency& lambda, const LatticeSubgroup& k);

/// a_λ(t) = ∫ ⟨λ,x⟩ B_X(t;x) dx over the quotient (Haar weight 1/|torsion| per
/// point). Truncated at `truncation` on infinite quotients.
SpectralValue spectral_covariance(const PCFieldModel& m, const Frequency& lambda, const Point& t,
                                  Int truncation = 64);

/// Z^λ(t) as a table over quotient points.
struct ZField {
  std::vector<QuotientCoord> points;
  std::vector<CVector> values;
  double weight = 1;       // Haar weight of each point
  double tail_bound = 0;   // bound on the norm of the omitted part
};

/// Z^λ(t)(x) = ⟨λ, ı(t)+x⟩·X(t+ξ(x)).
ZField z_field(const PCFieldModel& m, const Frequency& lambda, const Point& t, Int truncation = 64);

/// Haar-weighted inner product of two Z tables over their common points.
Complex z_inner(const ZField& a, const ZField& b);

struct ScorrSides {
  Complex lhs;
  Complex rhs;
  double tail_bound = 0;
};

/// lhs = (Z^λ(t), Z^μ(s)) evaluated from X directly; rhs = ⟨λ,t−s⟩·a_{λ−μ}(t−s).
ScorrSides scorr_check(const PCFieldModel& m, const Frequency& lambda, const Frequency& mu, const Point& t,
                       const Point& s, Int truncation = 64);

/// A complex atomic measure on the torus.
class AtomicMeasure {
 public:
  struct Atom {
    Frequency location;
    Complex weight;
  };

  AtomicMeasure() = default;

  /// Adds the weight to an existing atom within kFreqEps, or appends.
  void add(const Frequency& location, Complex weight);

  /// Drops atoms with |weight| ≤ threshold and sorts by location.
  void prune(double threshold);

  const std::vector<Atom>& atoms() const { return atoms_; }
  double variation() const;

  /// ∫ e^{+iχ·t} dγ(χ).
  Complex fourier(const Point& t) const;

  /// The atom at a location, if any.
  const Atom* find(const Frequency& location) const;

 private:
  std::vector<Atom> atoms_;
};

/// P̂_K(μ) = (1/|G/K|)·Σ_x ⟨μ,x⟩ P_K(x). Finite quotient only.
CVector periodic_fourier(const PeriodicField& p, const Frequency& mu);

/// Γ^{λ,μ}, the measure with (Z^λ(t), Z^μ(s)) = ∫ e^{iχ·(t−s)} dΓ^{λ,μ}(χ):
/// atoms χⱼ+ν (ν ∈ Λ_K) with weights (Projⱼ P̂(ν+λ), P̂(ν+μ)). Finite quotient
/// only; throws UndecidableError otherwise (the measure is not atomic).
AtomicMeasure gamma_pair(const PCFieldModel& m, const Frequency& lambda, const Frequency& mu);

/// γ_λ = Γ^{0,−λ}, so that a_λ(t) = ∫ e^{+iχ·t} dγ_λ(χ).
AtomicMeasure gamma_lambda(const PCFieldModel& m, const Frequency& lambda);

/// One slice 𝔽_λ = γ_λ∘ℓ_λ⁻¹ with ℓ_λ(χ) = (χ, χ−λ).
struct SpectrumSlice {
  Frequency lambda;
  AtomicMeasure gamma;
};

class SOSpectrum {
 public:
  explicit SOSpectrum(std::vector<SpectrumSlice> slices) : slices_(std::move(slices)) {}

  const std::vector<SpectrumSlice>& slices() const { return slices_; }

  /// 𝔎(t,s) = Σ_λ Σ_χ e^{i(χ·t − (χ−λ)·s)}·γ_λ({χ}).
  Complex kernel(const Point& t, const Point& s) const;

  double variation() const;

  /// Largest distance of an atom (χ, β) of 𝔽_λ from the hyperplane β = χ − λ.
  double hyperplane_violation() const;

 private:
  std::vector<SpectrumSlice> slices_;
};

/// Σ over Λ_K of the pushed-forward γ_λ. Finite quotients only; throws
/// UndecidableError for an infinite annihilator.
SOSpectrum so_spectrum(const PCFieldModel& m);

struct PosdefResult {
  double min_eigenvalue;
  double scale;
};

/// Smallest eigenvalue of M_jk = ⟨λ_j, t_j−t_k⟩·a_{λ_j−λ_k}(t_j−t_k).
PosdefResult posdef_check(const PCFieldModel& m, const std::vector<Frequency>& lambdas,
                          const std::vector<Point>& points, Int truncation = 64);

/// Ensemble-and-coset average estimate of a_λ(t) from sample paths. Every
/// coset of a finite quotient must contain a window point s with s+t in the
/// window; on infinite quotients only covered cosets contribute.
Complex estimate_spectral_covariance(const SampleSet& paths, const LatticeSubgroup& k, const Frequency& lambda,
                                     const Point& t);

/// Exact variance of the single-path estimator above for a Gaussian field with
/// the given kernel: tr(A C Aᴴ C) with C the window Gram matrix.
double estimator_variance(const KernelFn& kernel, const Window& w, const LatticeSubgroup& k,
                          const Frequency& lambda, const Point& t);

}  // namespace pcf
