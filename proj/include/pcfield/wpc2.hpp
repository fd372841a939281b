#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "pcfield/lattice.hpp"
#include "pcfield/model.hpp"
#include "pcfield/spectra.hpp"

namespace pcf {

/// Weak periodicity on ℤ² with period (T,S): K = {j(T,S)}.
struct WpcParams {
  Int T = 0;
  Int S = 0;
  BezoutPhi bz;

  static WpcParams make(Int t, Int s);
  LatticeSubgroup subgroup() const;

  /// φ(m,n) = (m,n)Φ' = (mT₁ + np, mS₁ + nq). Maps d·ℤ×{0} onto K.
  Point phi(const Point& mn) const;
  Point phi_inverse(const Point& t) const;
  /// ψ(s,t) = [(s,t)Φ⁻¹]_{2π}.
  Frequency psi(double s, double t) const;
  /// Dual of φ: χ ↦ [χΦ]_{2π}, the inverse of ψ.
  std::array<double, 2> psi_inverse(const Frequency& chi) const;
};

/// Λ_k(t) = ψ(2πk/d, t).
Frequency lambda_line(const WpcParams& w, Int k, double t);

/// One sampled line per k = 0..d−1 at t_i = 2πi/samples.
std::vector<std::vector<Frequency>> lambda_lines(const WpcParams& w, int samples);

/// (k, t) with Λ_k(t) = λ, or nothing when λ ∉ Λ_K.
std::optional<std::pair<Int, double>> locate(const WpcParams& w, const Frequency& lambda, double eps = kFreqEps);

/// The point (x, y, [x − 2πkq/d + S₁t], [y + 2πkp/d − T₁t]) of the plane L_{k,t}.
std::array<double, 4> plane_point(const WpcParams& w, Int k, double t, double x, double y);

/// Whether (χ, χ') lies on L_{k,t}.
bool on_plane(const WpcParams& w, Int k, double t, const Frequency& chi, const Frequency& chi2,
              double eps = kFreqEps);

/// (1/d) Σ_j Σ_{|l|≤L} e^{−i(j·2πk/d + l·t)} 𝔎((m,n)+φ(j,l), φ(j,l)).
/// Throws ContractError unless the model is periodic with exactly this K and
/// square integrable over the quotient.
SpectralValue a_kt(const PCFieldModel& m, const WpcParams& w, Int k, double t, const Point& mn,
                   Int truncation = 64);

/// Y(m,n) = X(φ(m,n)) as a model with K' = ℤ(1,0). Requires d = 1.
PCFieldModel rotate_to_stationary(const PCFieldModel& m, const WpcParams& w);

struct FigureRow {
  Int k;
  double t;
  double u;
  double v;
};

/// `samples` points per line, t_i = 2πi/(samples−1).
std::vector<FigureRow> figure_data(const WpcParams& w, int samples);

/// Rows of one line cut where u or v wraps around 2π.
std::vector<std::vector<FigureRow>> figure_segments(const std::vector<FigureRow>& rows);

}  // namespace pcf
