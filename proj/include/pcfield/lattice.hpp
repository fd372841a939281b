#pragma once

#include <complex>
#include <map>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace pcf {

using Int = std::int64_t;
using IntMatrix = Eigen::Matrix<Int, Eigen::Dynamic, Eigen::Dynamic>;

/// A point of the lattice ℤⁿ (row-vector convention).
using Point = std::vector<Int>;

/// Coordinates on ℤⁿ/K: torsion residues first, then free integers.
using QuotientCoord = std::vector<Int>;

/// Angle comparison tolerance, radians.
inline constexpr double kFreqEps = 1e-9;

/// Overflow-checked integer helpers. Throw OverflowError instead of wrapping.
Int checked_add(Int a, Int b);
Int checked_sub(Int a, Int b);
Int checked_mul(Int a, Int b);

/// Floor-style residue in [0, |m|).
Int mod_floor(Int a, Int m);

IntMatrix checked_product(const IntMatrix& a, const IntMatrix& b);

/// Determinant by fraction-free (Bareiss) elimination. Square input only.
Int determinant(const IntMatrix& a);

struct SmithForm {
  IntMatrix u;  // r × r, unimodular
  IntMatrix s;  // r × n, diagonal, s(i,i) | s(i+1,i+1)
  IntMatrix v;      // n × n, unimodular
  IntMatrix v_inv;  // V⁻¹, tracked exactly
};

/// U·A·V = S with non-negative invariant factors along the diagonal.
SmithForm smith_normal_form(const IntMatrix& a);

/// Row-echelon Hermite form with positive pivots; rows above each pivot are
/// reduced into [0, pivot). Zero rows are dropped.
IntMatrix hermite_normal_form(const IntMatrix& a);

/// A subgroup K of ℤⁿ given by integer generators (one per row).
class LatticeSubgroup {
 public:
  LatticeSubgroup(int n, IntMatrix generators);

  /// K = ℤⁿ.
  static LatticeSubgroup full(int n);

  /// "12,9" or "2,0;0,3": rows split by ';', entries by ','.
  static LatticeSubgroup parse(std::string_view text);

  int dim() const { return n_; }
  int rank() const { return static_cast<int>(hnf_.rows()); }
  const IntMatrix& generators() const { return generators_; }
  Point generator(int i) const;
  int generator_count() const { return static_cast<int>(generators_.rows()); }
  const IntMatrix& hnf() const { return hnf_; }

  /// Exact membership t ∈ K.
  bool contains(const Point& t) const;

  /// Canonical representative of t + K: Hermite-reduced, with every pivot
  /// coordinate in [0, pivot).
  Point reduce(const Point& t) const;

 private:
  int n_;
  IntMatrix generators_;
  IntMatrix hnf_;
  std::vector<int> pivots_;
};

/// The quotient ℤⁿ/K ≅ ℤ_{d1} × … × ℤ_{dk} × ℤ^f, built from the Smith form
/// of the generator matrix.
class QuotientStructure {
 public:
  explicit QuotientStructure(LatticeSubgroup k);

  const LatticeSubgroup& subgroup() const { return k_; }
  int dim() const { return k_.dim(); }

  /// Invariant factors ≥ 2.
  const std::vector<Int>& torsion() const { return torsion_; }
  int free_rank() const { return static_cast<int>(free_axes_.size()); }
  int coord_size() const { return static_cast<int>(torsion_.size()) + free_rank(); }

  /// ∏ dᵢ, the order of the torsion part.
  Int torsion_order() const { return torsion_order_; }
  bool is_finite() const { return free_axes_.empty(); }

  /// Haar mass of one quotient point: mass 1 on the torsion factor,
  /// counting on the free factor.
  double haar_weight() const { return 1.0 / static_cast<double>(torsion_order_); }

  /// Full Smith diagonal, including unit factors.
  const std::vector<Int>& invariant_factors() const { return factors_; }

  /// Per-axis periods when the generator matrix is square diagonal.
  std::optional<std::vector<Int>> axis_periods() const;

  /// The quotient map ı.
  QuotientCoord to_quotient(const Point& t) const;

  /// The cross-section ξ: ı(ξ(x)) = x, ξ(0) = 0, representatives Hermite-reduced.
  Point section(const QuotientCoord& x) const;

  QuotientCoord add(const QuotientCoord& a, const QuotientCoord& b) const;
  QuotientCoord negate(const QuotientCoord& a) const;
  QuotientCoord zero() const { return QuotientCoord(static_cast<std::size_t>(coord_size()), 0); }

  /// Free part of x as a max-norm.
  Int free_norm(const QuotientCoord& x) const;

  /// Every quotient point with |free coordinate| ≤ radius (all of them when finite).
  std::vector<QuotientCoord> enumerate(Int free_radius = 0) const;

  /// Change of basis: y = t·V puts K on the Smith diagonal.
  const IntMatrix& basis_change() const { return v_; }
  /// Axes of y carrying torsion residues, then free axes.
  const std::vector<int>& torsion_axes() const { return torsion_axes_; }
  const std::vector<int>& free_axes() const { return free_axes_; }

 private:
  LatticeSubgroup k_;
  IntMatrix v_;
  IntMatrix v_inv_;
  std::vector<Int> factors_;
  std::vector<Int> torsion_;
  std::vector<int> torsion_axes_;
  std::vector<int> free_axes_;
  Int torsion_order_ = 1;
};

/// Wraps into [0, 2π).
double wrap_angle(double a);

/// Distance on the circle, in [0, π].
double angular_distance(double a, double b);

/// A character of ℤⁿ, λ ∈ [0,2π)ⁿ, evaluated as ⟨λ,t⟩ = e^{−iλ·t}.
class Frequency {
 public:
  Frequency() = default;
  explicit Frequency(std::vector<double> theta);

  static Frequency zero(int n) { return Frequency(std::vector<double>(static_cast<std::size_t>(n), 0.0)); }

  int dim() const { return static_cast<int>(theta_.size()); }
  const std::vector<double>& theta() const { return theta_; }
  double operator[](std::size_t i) const { return theta_[i]; }

  Frequency operator+(const Frequency& o) const;
  Frequency operator-(const Frequency& o) const;
  Frequency operator-() const;

  /// Equal up to eps on the torus.
  bool near(const Frequency& o, double eps = kFreqEps) const;

  /// Lexicographic order with eps-ties.
  bool less(const Frequency& o, double eps = kFreqEps) const;

  /// Quotient-dual coordinates (torsion index j with angle 2πj/d, then free
  /// angles), present when the frequency was produced from an annihilator.
  const std::optional<std::vector<double>>& dual_coords() const { return dual_; }
  Frequency with_dual(std::vector<double> dual) const;

 private:
  std::vector<double> theta_;
  std::optional<std::vector<double>> dual_;
};

/// ⟨λ,t⟩ = e^{−iλ·t}.
std::complex<double> character(const Frequency& lambda, const Point& t);

/// ⟨λ,x⟩ for x ∈ ℤⁿ/K, evaluated at the cross-section ξ(x).
std::complex<double> character(const Frequency& lambda, const QuotientStructure& q,
                               const QuotientCoord& x);

/// λ ∈ Λ_K, i.e. |⟨λ,k⟩ − 1| ≤ eps for every generator k.
bool annihilates(const Frequency& lambda, const LatticeSubgroup& k, double eps = kFreqEps);

/// One coset of the annihilator: offset + Σ angleᵢ·directionᵢ (mod 2π).
struct AnnihilatorFamily {
  std::vector<Int> torsion_index;
  std::vector<double> offset;
  std::vector<std::vector<double>> directions;

  Frequency at(std::span<const double> free_angles) const;
};

/// Λ_K: a finite set of frequencies, or finitely many affine families when
/// the quotient has free rank.
class Annihilator {
 public:
  Annihilator(const QuotientStructure& q);

  bool is_finite() const { return free_rank_ == 0; }
  int free_rank() const { return free_rank_; }
  const std::vector<AnnihilatorFamily>& families() const { return families_; }

  /// All points; finite case only.
  std::vector<Frequency> points() const;

  std::size_t size() const { return families_.size(); }

 private:
  int free_rank_;
  std::vector<AnnihilatorFamily> families_;
};

inline Annihilator annihilator(const QuotientStructure& q) { return Annihilator(q); }

/// The point of Λ_K with given torsion index and free angles.
Frequency dual_point(const QuotientStructure& q, std::span<const Int> torsion_index,
                     std::span<const double> free_angles);

/// Bezout data for a one-generator subgroup K = {k(T,S)} of ℤ².
struct BezoutPhi {
  Int d;
  Int t1;
  Int s1;
  Int p;
  Int q;
  IntMatrix phi;  // [[T1, p], [S1, q]], det = 1
};

BezoutPhi bezout_phi(Int t, Int s);

/// Extended Euclid: returns (g, a, b) with a·x + b·y = g ≥ 0.
std::tuple<Int, Int, Int> extended_gcd(Int x, Int y);

/// A finite set of lattice points used as an evaluation window.
class Window {
 public:
  explicit Window(std::vector<Point> points);

  /// All points of the box lo ≤ t ≤ hi.
  static Window box(const Point& lo, const Point& hi);

  /// "a..b,c..d" (one range per axis; a bare integer is a one-point range).
  static Window parse(std::string_view spec);

  /// The index box lo ≤ i ≤ hi mapped through the rows of an integer basis:
  /// t = Σₖ iₖ·basis.row(k).
  static Window lattice_box(const Point& lo, const Point& hi, const IntMatrix& basis);

  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  int dim() const { return points_.empty() ? 0 : static_cast<int>(points_.front().size()); }
  const Point& operator[](std::size_t i) const { return points_[i]; }

  std::optional<std::size_t> index_of(const Point& t) const;
  bool contains(const Point& t) const { return index_of(t).has_value(); }

 private:
  std::vector<Point> points_;
  std::map<Point, std::size_t> index_;
};

Point add_points(const Point& a, const Point& b);
Point sub_points(const Point& a, const Point& b);

/// Both sides of Weil's formula for a finitely supported f, with counting
/// measures: Σ_cosets Σ_{k∈K} f(k+s) and Σ_t f(t).
std::pair<std::complex<double>, std::complex<double>> weil_check(
    const std::vector<std::pair<Point, std::complex<double>>>& f, const LatticeSubgroup& k);

}  // namespace pcf
