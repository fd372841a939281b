#include "pcfield/lattice.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "pcfield/errors.hpp"

namespace pcf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Point row_of(const IntMatrix& m, int r) {
  Point p(static_cast<std::size_t>(m.cols()));
  for (int c = 0; c < m.cols(); ++c) p[static_cast<std::size_t>(c)] = m(r, c);
  return p;
}

Int parse_int(const std::string& tok) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    throw ContractError("not an integer: '" + tok + "'");
  }
  while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
  if (pos != tok.size()) throw ContractError("not an integer: '" + tok + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

// --- LatticeSubgroup ---------------------------------------------------------

LatticeSubgroup::LatticeSubgroup(int n, IntMatrix generators) : n_(n), generators_(std::move(generators)) {
  if (n_ <= 0) throw ContractError("lattice dimension must be positive");
  if (generators_.rows() > 0 && generators_.cols() != n_)
    throw ContractError("generator rows must have " + std::to_string(n_) + " entries");
  if (generators_.rows() == 0) generators_.resize(0, n_);
  for (int r = 0; r < generators_.rows(); ++r)
    if (generators_.row(r).isZero()) throw ContractError("zero generator row " + std::to_string(r));
  hnf_ = hermite_normal_form(generators_);
  for (int r = 0; r < hnf_.rows(); ++r) {
    int c = 0;
    while (hnf_(r, c) == 0) ++c;
    pivots_.push_back(c);
  }
}

LatticeSubgroup LatticeSubgroup::full(int n) { return LatticeSubgroup(n, IntMatrix::Identity(n, n)); }

LatticeSubgroup LatticeSubgroup::parse(std::string_view text) {
  const std::string body = trim(std::string(text));
  if (body.empty()) throw ContractError("empty generator matrix");
  std::vector<std::vector<Int>> rows;
  std::stringstream rs(body);
  std::string row;
  while (std::getline(rs, row, ';')) {
    row = trim(row);
    if (row.empty()) throw ContractError("empty row in generator matrix");
    std::vector<Int> entries;
    std::stringstream es(row);
    std::string tok;
    while (std::getline(es, tok, ',')) entries.push_back(parse_int(trim(tok)));
    if (!rows.empty() && entries.size() != rows.front().size())
      throw ContractError("ragged generator matrix");
    rows.push_back(std::move(entries));
  }
  const int n = static_cast<int>(rows.front().size());
  IntMatrix g(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < n; ++c) g(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  return LatticeSubgroup(n, g);
}

Point LatticeSubgroup::generator(int i) const { return row_of(generators_, i); }

Point LatticeSubgroup::reduce(const Point& t) const {
  if (static_cast<int>(t.size()) != n_) throw ContractError("point dimension mismatch");
  Point out = t;
  for (int r = 0; r < hnf_.rows(); ++r) {
    const int c = pivots_[static_cast<std::size_t>(r)];
    const Int piv = hnf_(r, c);
    const Int rem = mod_floor(out[static_cast<std::size_t>(c)], piv);
    const Int q = (out[static_cast<std::size_t>(c)] - rem) / piv;
    if (q == 0) continue;
    for (int j = 0; j < n_; ++j)
      out[static_cast<std::size_t>(j)] = checked_sub(out[static_cast<std::size_t>(j)], checked_mul(q, hnf_(r, j)));
  }
  return out;
}

bool LatticeSubgroup::contains(const Point& t) const {
  const Point r = reduce(t);
  for (Int v : r)
    if (v != 0) return false;
  return true;
}

// --- QuotientStructure -------------------------------------------------------

QuotientStructure::QuotientStructure(LatticeSubgroup k) : k_(std::move(k)) {
  const int n = k_.dim();
  const SmithForm snf = smith_normal_form(k_.generators());
  v_ = snf.v;
  v_inv_ = snf.v_inv;
  const int diag = static_cast<int>(std::min<Eigen::Index>(snf.s.rows(), snf.s.cols()));
  int rank = 0;
  for (int i = 0; i < diag; ++i) {
    const Int d = snf.s(i, i);
    if (d == 0) break;
    factors_.push_back(d);
    ++rank;
    if (d >= 2) {
      torsion_.push_back(d);
      torsion_axes_.push_back(i);
      torsion_order_ = checked_mul(torsion_order_, d);
    }
  }
  for (int i = rank; i < n; ++i) free_axes_.push_back(i);
}

std::optional<std::vector<Int>> QuotientStructure::axis_periods() const {
  const IntMatrix& g = k_.generators();
  if (g.rows() != g.cols()) return std::nullopt;
  std::vector<Int> out;
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) {
      if (i == j) out.push_back(g(i, i) < 0 ? -g(i, i) : g(i, i));
      else if (g(i, j) != 0) return std::nullopt;
    }
  return out;
}

QuotientCoord QuotientStructure::to_quotient(const Point& t) const {
  const int n = dim();
  if (static_cast<int>(t.size()) != n) throw ContractError("point dimension mismatch");
  auto y_at = [&](int axis) {
    Int acc = 0;
    for (int r = 0; r < n; ++r) acc = checked_add(acc, checked_mul(t[static_cast<std::size_t>(r)], v_(r, axis)));
    return acc;
  };
  QuotientCoord x;
  x.reserve(static_cast<std::size_t>(coord_size()));
  for (std::size_t i = 0; i < torsion_.size(); ++i) x.push_back(mod_floor(y_at(torsion_axes_[i]), torsion_[i]));
  for (int a : free_axes_) x.push_back(y_at(a));
  return x;
}

Point QuotientStructure::section(const QuotientCoord& x) const {
  if (static_cast<int>(x.size()) != coord_size()) throw ContractError("quotient coordinate size mismatch");
  const int n = dim();
  std::vector<Int> y(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < torsion_.size(); ++i)
    y[static_cast<std::size_t>(torsion_axes_[i])] = mod_floor(x[i], torsion_[i]);
  for (std::size_t j = 0; j < free_axes_.size(); ++j)
    y[static_cast<std::size_t>(free_axes_[j])] = x[torsion_.size() + j];
  Point t(static_cast<std::size_t>(n), 0);
  for (int c = 0; c < n; ++c) {
    Int acc = 0;
    for (int r = 0; r < n; ++r) acc = checked_add(acc, checked_mul(y[static_cast<std::size_t>(r)], v_inv_(r, c)));
    t[static_cast<std::size_t>(c)] = acc;
  }
  return k_.reduce(t);
}

QuotientCoord QuotientStructure::add(const QuotientCoord& a, const QuotientCoord& b) const {
  QuotientCoord out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Int s = checked_add(a[i], b[i]);
    out[i] = i < torsion_.size() ? mod_floor(s, torsion_[i]) : s;
  }
  return out;
}

QuotientCoord QuotientStructure::negate(const QuotientCoord& a) const {
  QuotientCoord out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = i < torsion_.size() ? mod_floor(-a[i], torsion_[i]) : checked_sub(0, a[i]);
  return out;
}

Int QuotientStructure::free_norm(const QuotientCoord& x) const {
  Int m = 0;
  for (std::size_t i = torsion_.size(); i < x.size(); ++i) m = std::max(m, x[i] < 0 ? -x[i] : x[i]);
  return m;
}

std::vector<QuotientCoord> QuotientStructure::enumerate(Int free_radius) const {
  if (free_radius < 0) throw ContractError("negative enumeration radius");
  std::vector<QuotientCoord> out;
  QuotientCoord x = zero();
  const std::size_t k = torsion_.size();
  for (std::size_t j = k; j < x.size(); ++j) x[j] = -free_radius;
  for (;;) {
    out.push_back(x);
    std::size_t i = 0;
    for (; i < x.size(); ++i) {
      const Int hi = i < k ? torsion_[i] - 1 : free_radius;
      const Int lo = i < k ? 0 : -free_radius;
      if (x[i] < hi) {
        ++x[i];
        break;
      }
      x[i] = lo;
    }
    if (i == x.size()) break;
  }
  return out;
}

// --- Frequency ---------------------------------------------------------------

double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

double angular_distance(double a, double b) {
  const double d = wrap_angle(a - b);
  return std::min(d, kTwoPi - d);
}

Frequency::Frequency(std::vector<double> theta) : theta_(std::move(theta)) {
  for (double& a : theta_) {
    if (!std::isfinite(a)) throw ContractError("frequency angles must be finite");
    a = wrap_angle(a);
  }
}

Frequency Frequency::operator+(const Frequency& o) const {
  if (o.dim() != dim()) throw ContractError("frequency dimension mismatch");
  std::vector<double> t(theta_.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = theta_[i] + o.theta_[i];
  return Frequency(std::move(t));
}

Frequency Frequency::operator-(const Frequency& o) const {
  if (o.dim() != dim()) throw ContractError("frequency dimension mismatch");
  std::vector<double> t(theta_.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = theta_[i] - o.theta_[i];
  return Frequency(std::move(t));
}

Frequency Frequency::operator-() const { return Frequency::zero(dim()) - *this; }

bool Frequency::near(const Frequency& o, double eps) const {
  if (o.dim() != dim()) return false;
  for (std::size_t i = 0; i < theta_.size(); ++i)
    if (angular_distance(theta_[i], o.theta_[i]) > eps) return false;
  return true;
}

bool Frequency::less(const Frequency& o, double eps) const {
  for (std::size_t i = 0; i < theta_.size(); ++i) {
    if (angular_distance(theta_[i], o.theta_[i]) <= eps) continue;
    return theta_[i] < o.theta_[i];
  }
  return false;
}

Frequency Frequency::with_dual(std::vector<double> dual) const {
  Frequency f = *this;
  f.dual_ = std::move(dual);
  return f;
}

std::complex<double> character(const Frequency& lambda, const Point& t) {
  if (static_cast<int>(t.size()) != lambda.dim()) throw ContractError("character: dimension mismatch");
  // Reduce each product mod 2π before summing to keep large lags accurate.
  double phase = 0;
  for (std::size_t i = 0; i < t.size(); ++i) phase += std::fmod(lambda[i] * static_cast<double>(t[i]), kTwoPi);
  return std::polar(1.0, -phase);
}

std::complex<double> character(const Frequency& lambda, const QuotientStructure& q, const QuotientCoord& x) {
  return character(lambda, q.section(x));
}

bool annihilates(const Frequency& lambda, const LatticeSubgroup& k, double eps) {
  for (int i = 0; i < k.generator_count(); ++i)
    if (std::abs(character(lambda, k.generator(i)) - 1.0) > eps) return false;
  return true;
}

// --- Annihilator -------------------------------------------------------------

Frequency AnnihilatorFamily::at(std::span<const double> free_angles) const {
  if (free_angles.size() != directions.size()) throw ContractError("annihilator family: wrong number of free angles");
  std::vector<double> theta = offset;
  for (std::size_t f = 0; f < directions.size(); ++f)
    for (std::size_t c = 0; c < theta.size(); ++c) theta[c] += free_angles[f] * directions[f][c];
  Frequency out(std::move(theta));
  std::vector<double> dual;
  dual.reserve(torsion_index.size() + free_angles.size());
  for (Int j : torsion_index) dual.push_back(static_cast<double>(j));
  for (double a : free_angles) dual.push_back(wrap_angle(a));
  return out.with_dual(std::move(dual));
}

Frequency dual_point(const QuotientStructure& q, std::span<const Int> torsion_index,
                     std::span<const double> free_angles) {
  const int n = q.dim();
  if (torsion_index.size() != q.torsion().size() || static_cast<int>(free_angles.size()) != q.free_rank())
    throw ContractError("dual_point: coordinate size mismatch");
  // λ = μ·Vᵀ with μ = 2πj/d on torsion axes and the free angles on free axes.
  std::vector<double> mu(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < torsion_index.size(); ++i)
    mu[static_cast<std::size_t>(q.torsion_axes()[i])] =
        kTwoPi * static_cast<double>(mod_floor(torsion_index[i], q.torsion()[i])) / static_cast<double>(q.torsion()[i]);
  for (std::size_t j = 0; j < free_angles.size(); ++j) mu[static_cast<std::size_t>(q.free_axes()[j])] = free_angles[j];
  const IntMatrix& v = q.basis_change();
  std::vector<double> theta(static_cast<std::size_t>(n), 0.0);
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a) theta[static_cast<std::size_t>(c)] += mu[static_cast<std::size_t>(a)] * static_cast<double>(v(c, a));
  std::vector<double> dual(torsion_index.begin(), torsion_index.end());
  for (double a : free_angles) dual.push_back(wrap_angle(a));
  return Frequency(std::move(theta)).with_dual(std::move(dual));
}

Annihilator::Annihilator(const QuotientStructure& q) : free_rank_(q.free_rank()) {
  const int n = q.dim();
  const IntMatrix& v = q.basis_change();
  std::vector<std::vector<double>> dirs;
  for (int a : q.free_axes()) {
    std::vector<double> d(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) d[static_cast<std::size_t>(c)] = static_cast<double>(v(c, a));
    dirs.push_back(std::move(d));
  }
  const std::vector<double> no_angles(static_cast<std::size_t>(free_rank_), 0.0);
  for (const QuotientCoord& x : q.enumerate(0)) {
    std::vector<Int> j(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(q.torsion().size()));
    const Frequency base = dual_point(q, j, no_angles);
    families_.push_back(AnnihilatorFamily{j, base.theta(), dirs});
  }
}

std::vector<Frequency> Annihilator::points() const {
  if (!is_finite()) throw ContractError("annihilator has free rank; use families()");
  std::vector<Frequency> out;
  out.reserve(families_.size());
  for (const auto& f : families_) out.push_back(f.at({}));
  return out;
}

// --- Weil's formula ----------------------------------------------------------

std::pair<std::complex<double>, std::complex<double>> weil_check(
    const std::vector<std::pair<Point, std::complex<double>>>& f, const LatticeSubgroup& k) {
  const int n = k.dim();
  std::map<Point, std::complex<double>> values;
  std::complex<double> rhs = 0;
  for (const auto& [t, v] : f) {
    if (static_cast<int>(t.size()) != n) throw ContractError("weil_check: point dimension mismatch");
    values[t] += v;
    rhs += v;
  }
  if (values.empty()) return {0.0, 0.0};

  Point lo = values.begin()->first, hi = lo;
  for (const auto& [t, v] : values)
    for (int i = 0; i < n; ++i) {
      lo[static_cast<std::size_t>(i)] = std::min(lo[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(i)]);
      hi[static_cast<std::size_t>(i)] = std::max(hi[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(i)]);
    }

  const QuotientStructure q(k);
  std::set<QuotientCoord> cosets;
  for (const auto& [t, v] : values) cosets.insert(q.to_quotient(t));

  std::complex<double> lhs = 0;
  for (const QuotientCoord& x : cosets) {
    const Point s = q.section(x);
    // Σ_{k∈K} f(k+s): walk the support's bounding box and keep the points
    // whose offset from s lies in K.
    Point t = lo;
    for (;;) {
      Point diff(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) diff[i] = checked_sub(t[i], s[i]);
      if (k.contains(diff)) {
        const auto it = values.find(t);
        if (it != values.end()) lhs += it->second;
      }
      std::size_t i = 0;
      for (; i < t.size(); ++i) {
        if (t[i] < hi[i]) {
          ++t[i];
          break;
        }
        t[i] = lo[i];
      }
      if (i == t.size()) break;
    }
  }
  return {lhs, rhs};
}

}  // namespace pcf

namespace pcf {

// --- Window ------------------------------------------------------------------

Window::Window(std::vector<Point> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].size() != points_.front().size()) throw ContractError("window points differ in dimension");
    if (!index_.emplace(points_[i], i).second) throw ContractError("duplicate point in window");
  }
}

Window Window::box(const Point& lo, const Point& hi) {
  return lattice_box(lo, hi, IntMatrix::Identity(static_cast<Eigen::Index>(lo.size()), static_cast<Eigen::Index>(lo.size())));
}

Window Window::lattice_box(const Point& lo, const Point& hi, const IntMatrix& basis) {
  if (lo.size() != hi.size() || lo.empty()) throw ContractError("window bounds differ in dimension");
  if (basis.rows() != static_cast<Eigen::Index>(lo.size())) throw ContractError("window basis needs one row per index axis");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) throw ContractError("empty window range");
  std::vector<Point> pts;
  Point idx = lo;
  const auto n = static_cast<std::size_t>(basis.cols());
  for (;;) {
    Point t(n, 0);
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t c = 0; c < n; ++c)
        t[c] = checked_add(t[c], checked_mul(idx[k], basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c))));
    pts.push_back(std::move(t));
    std::size_t i = 0;
    for (; i < idx.size(); ++i) {
      if (idx[i] < hi[i]) {
        ++idx[i];
        break;
      }
      idx[i] = lo[i];
    }
    if (i == idx.size()) break;
  }
  return Window(std::move(pts));
}

Window Window::parse(std::string_view spec) {
  const std::string body = trim(std::string(spec));
  if (body.empty()) throw ContractError("empty window specification");
  Point lo, hi;
  std::stringstream ss(body);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      lo.push_back(parse_int(part));
      hi.push_back(lo.back());
    } else {
      lo.push_back(parse_int(trim(part.substr(0, dots))));
      hi.push_back(parse_int(trim(part.substr(dots + 2))));
    }
  }
  return box(lo, hi);
}

std::optional<std::size_t> Window::index_of(const Point& t) const {
  const auto it = index_.find(t);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Point add_points(const Point& a, const Point& b) {
  if (a.size() != b.size()) throw ContractError("point dimension mismatch");
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = checked_add(a[i], b[i]);
  return r;
}

Point sub_points(const Point& a, const Point& b) {
  if (a.size() != b.size()) throw ContractError("point dimension mismatch");
  Point r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = checked_sub(a[i], b[i]);
  return r;
}

}  // namespace pcf
