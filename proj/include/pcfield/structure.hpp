#pragma once

#include <cstdint>
#include <vector>

#include "pcfield/lattice.hpp"
#include "pcfield/model.hpp"

namespace pcf {

/// Row a of `vectors` holds coordinates of X(window[a]) in ℂʳ, r = rank.
struct HilbertEmbedding {
  Window window;
  CMatrix vectors;
  double gram_error = 0;  // max |(x_a, x_b) − G(a,b)|
  double scale = 0;       // max G(a,a)

  int rank() const { return static_cast<int>(vectors.cols()); }
  CVector at(std::size_t a) const { return vectors.row(static_cast<Eigen::Index>(a)).transpose(); }
};

/// Factors a Hermitian PSD Gram matrix, G = Q Λ Qᴴ, keeping eigenvalues above
/// rank_tol·λ_max. Throws NumericalError if G is not Hermitian PSD within
/// 1e-9·scale.
HilbertEmbedding embed(const CMatrix& gram, const Window& w, double rank_tol = 1e-9);
HilbertEmbedding embed(const KernelFn& kernel, const Window& w, double rank_tol = 1e-9);

struct ShiftOptions {
  /// Minimum number of window points t with t+k also in the window, per
  /// generator. 0 means "at least the rank of the embedding".
  std::size_t min_overlap = 1;
  /// Relative tolerance on the isometry of the overlap data.
  double isometry_tol = 1e-8;
  /// Phase clustering tolerance for the joint eigendecomposition.
  double phase_tol = 1e-7;
  std::uint64_t seed = 1;
};

/// One joint eigenspace of the shifts: a phase per generator and an
/// orthonormal basis.
struct JointEigenspace {
  std::vector<double> phases;
  CMatrix basis;
};

/// Commuting unitaries on the span of the embedding, one per generator of K.
struct ShiftSystem {
  std::vector<Point> generators;
  std::vector<CMatrix> ops;
  std::vector<JointEigenspace> spaces;
  double overlap_residual = 0;  // max ‖V x_t − x_{t+k}‖ on overlaps
  double isometry_violation = 0;
  double commutator = 0;
  double unitarity = 0;
};

/// Builds V_k from X(t) ↦ X(t+k) on the overlaps, completes it to a unitary on
/// the span, and jointly diagonalizes the family.
ShiftSystem k_shift(const HilbertEmbedding& emb, const LatticeSubgroup& k, const ShiftOptions& opt = {});

/// Lifts each joint eigenphase vector to χ ∈ [0,2π)ⁿ with e^{iχ·k} = e^{iφ_k}
/// for every generator (fundamental-domain choice from the Smith form) and
/// returns Uᵗ = Σ e^{iχ·t} Projⱼ.
UnitaryRep lift_and_extend(const ShiftSystem& shifts, const LatticeSubgroup& k);

/// Max ‖U^k − V_k‖ over the generators.
double shift_agreement(const UnitaryRep& u, const ShiftSystem& shifts);

struct PeriodicPart {
  PeriodicField field;
  double periodicity = 0;  // max ‖U^{−t}X(t) − P_K(ı(t))‖ over the window
};

/// P(t) = U^{−t}X(t), stored on the cosets met by the window (first window
/// point of each coset).
PeriodicPart periodic_part(const HilbertEmbedding& emb, const UnitaryRep& u, const LatticeSubgroup& k);

/// Gladyshev components of a model on a finite quotient:
/// X^λ(t) = Uᵗ P̂_K(λ), X(t) = Σ_λ e^{iλ·t} X^λ(t).
class GladyshevComponents {
 public:
  explicit GladyshevComponents(const PCFieldModel& m);

  const std::vector<Frequency>& lambdas() const { return lambdas_; }
  std::size_t size() const { return lambdas_.size(); }
  const CVector& coefficient(std::size_t i) const { return coeffs_[i]; }

  CVector component(std::size_t i, const Point& t) const;
  CVector reconstruct(const Point& t) const;

 private:
  UnitaryRep u_;
  std::vector<Frequency> lambdas_;
  std::vector<CVector> coeffs_;
};

GladyshevComponents gladyshev_components(const PCFieldModel& m);

struct DecompositionReport {
  int rank = 0;
  double scale = 0;
  double gram_error = 0;
  double overlap_residual = 0;
  double isometry_violation = 0;
  double commutator = 0;
  double unitarity = 0;
  double shift_agreement = 0;  // max ‖U^k − V_k‖
  double periodicity = 0;      // relative to max ‖X(t)‖
  double roundtrip = 0;        // max |𝔎'(t,s) − 𝔎(t,s)| relative to scale
};

struct Decomposition {
  HilbertEmbedding embedding;
  ShiftSystem shifts;
  PCFieldModel model;
  DecompositionReport report;
};

/// Full pipeline: embed, K-shift, lift, periodic part, and residuals.
Decomposition decompose(const CMatrix& gram, const Window& w, const LatticeSubgroup& k, const ShiftOptions& opt = {});
Decomposition decompose(const KernelFn& kernel, const Window& w, const LatticeSubgroup& k, const ShiftOptions& opt = {});

}  // namespace pcf
