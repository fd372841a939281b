#include <algorithm>
#include <cstdlib>
#include <string>

#include "pcfield/errors.hpp"
#include "pcfield/lattice.hpp"

namespace pcf {

Int checked_add(Int a, Int b) {
  Int r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("integer overflow in addition");
  return r;
}

Int checked_sub(Int a, Int b) {
  Int r;
  if (__builtin_sub_overflow(a, b, &r)) throw OverflowError("integer overflow in subtraction");
  return r;
}

Int checked_mul(Int a, Int b) {
  Int r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("integer overflow in multiplication");
  return r;
}

Int mod_floor(Int a, Int m) {
  if (m == 0) throw ContractError("modulus must be nonzero");
  const Int am = m < 0 ? checked_sub(0, m) : m;
  Int r = a % am;
  return r < 0 ? r + am : r;
}

namespace {

Int floor_div(Int a, Int b) {
  Int q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// row_dst -= q * row_src, optionally mirrored on a companion matrix.
void row_axpy(IntMatrix& m, int dst, int src, Int q) {
  if (q == 0) return;
  for (int c = 0; c < m.cols(); ++c) m(dst, c) = checked_sub(m(dst, c), checked_mul(q, m(src, c)));
}

void col_axpy(IntMatrix& m, int dst, int src, Int q) {
  if (q == 0) return;
  for (int r = 0; r < m.rows(); ++r) m(r, dst) = checked_sub(m(r, dst), checked_mul(q, m(r, src)));
}

}  // namespace

IntMatrix checked_product(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols() != b.rows()) throw ContractError("matrix product: dimension mismatch");
  IntMatrix out = IntMatrix::Zero(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      Int acc = 0;
      for (int k = 0; k < a.cols(); ++k) acc = checked_add(acc, checked_mul(a(i, k), b(k, j)));
      out(i, j) = acc;
    }
  return out;
}

Int determinant(const IntMatrix& a) {
  if (a.rows() != a.cols()) throw ContractError("determinant of a non-square matrix");
  const int n = static_cast<int>(a.rows());
  if (n == 0) return 1;
  IntMatrix m = a;
  Int sign = 1;
  Int prev = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (m(k, k) == 0) {
      int swap = -1;
      for (int i = k + 1; i < n; ++i)
        if (m(i, k) != 0) {
          swap = i;
          break;
        }
      if (swap < 0) return 0;
      m.row(k).swap(m.row(swap));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) {
        const __int128 num = static_cast<__int128>(m(i, j)) * m(k, k) -
                             static_cast<__int128>(m(i, k)) * m(k, j);
        const __int128 q = num / prev;
        if (q > INT64_MAX || q < INT64_MIN) throw OverflowError("integer overflow in determinant");
        m(i, j) = static_cast<Int>(q);
      }
    prev = m(k, k);
  }
  return checked_mul(sign, m(n - 1, n - 1));
}

IntMatrix hermite_normal_form(const IntMatrix& a) {
  IntMatrix m = a;
  const int rows = static_cast<int>(m.rows());
  const int cols = static_cast<int>(m.cols());
  int prow = 0;
  for (int c = 0; c < cols && prow < rows; ++c) {
    for (;;) {
      int best = -1;
      for (int i = prow; i < rows; ++i)
        if (m(i, c) != 0 && (best < 0 || std::llabs(m(i, c)) < std::llabs(m(best, c)))) best = i;
      if (best < 0) break;
      if (best != prow) m.row(best).swap(m.row(prow));
      bool clean = true;
      for (int i = prow + 1; i < rows; ++i) {
        row_axpy(m, i, prow, m(i, c) / m(prow, c));
        if (m(i, c) != 0) clean = false;
      }
      if (clean) break;
    }
    if (m(prow, c) == 0) continue;
    if (m(prow, c) < 0)
      for (int j = 0; j < cols; ++j) m(prow, j) = checked_sub(0, m(prow, j));
    for (int i = 0; i < prow; ++i) row_axpy(m, i, prow, floor_div(m(i, c), m(prow, c)));
    ++prow;
  }
  return m.topRows(prow);
}

SmithForm smith_normal_form(const IntMatrix& a) {
  const int r = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  IntMatrix s = a;
  IntMatrix u = IntMatrix::Identity(r, r);
  IntMatrix v = IntMatrix::Identity(n, n);
  IntMatrix v_inv = IntMatrix::Identity(n, n);
  const int steps = std::min(r, n);
  for (int t = 0; t < steps; ++t) {
    for (;;) {
      int bi = -1, bj = -1;
      for (int i = t; i < r; ++i)
        for (int j = t; j < n; ++j)
          if (s(i, j) != 0 && (bi < 0 || std::llabs(s(i, j)) < std::llabs(s(bi, bj)))) {
            bi = i;
            bj = j;
          }
      if (bi < 0) return {u, s, v, v_inv};  // remaining block is zero
      if (bi != t) {
        s.row(bi).swap(s.row(t));
        u.row(bi).swap(u.row(t));
      }
      if (bj != t) {
        s.col(bj).swap(s.col(t));
        v.col(bj).swap(v.col(t));
        v_inv.row(bj).swap(v_inv.row(t));
      }
      bool clean = true;
      for (int i = t + 1; i < r; ++i) {
        const Int q = s(i, t) / s(t, t);
        row_axpy(s, i, t, q);
        row_axpy(u, i, t, q);
        if (s(i, t) != 0) clean = false;
      }
      for (int j = t + 1; j < n; ++j) {
        const Int q = s(t, j) / s(t, t);
        col_axpy(s, j, t, q);
        col_axpy(v, j, t, q);
        row_axpy(v_inv, t, j, -q);
        if (s(t, j) != 0) clean = false;
      }
      if (!clean) continue;
      // The pivot must divide the whole trailing block.
      int bad = -1;
      for (int i = t + 1; i < r && bad < 0; ++i)
        for (int j = t + 1; j < n; ++j)
          if (s(i, j) % s(t, t) != 0) {
            bad = i;
            break;
          }
      if (bad < 0) break;
      row_axpy(s, t, bad, -1);
      row_axpy(u, t, bad, -1);
    }
    if (s(t, t) < 0) {
      for (int j = 0; j < n; ++j) s(t, j) = checked_sub(0, s(t, j));
      for (int j = 0; j < r; ++j) u(t, j) = checked_sub(0, u(t, j));
    }
  }
  return {u, s, v, v_inv};
}

std::tuple<Int, Int, Int> extended_gcd(Int x, Int y) {
  Int old_r = x, rr = y;
  Int old_a = 1, a = 0;
  Int old_b = 0, b = 1;
  while (rr != 0) {
    const Int q = old_r / rr;
    Int tmp = checked_sub(old_r, checked_mul(q, rr));
    old_r = rr;
    rr = tmp;
    tmp = checked_sub(old_a, checked_mul(q, a));
    old_a = a;
    a = tmp;
    tmp = checked_sub(old_b, checked_mul(q, b));
    old_b = b;
    b = tmp;
  }
  if (old_r < 0) return {checked_sub(0, old_r), checked_sub(0, old_a), checked_sub(0, old_b)};
  return {old_r, old_a, old_b};
}

BezoutPhi bezout_phi(Int t, Int s) {
  if (t == 0 && s == 0) throw ContractError("bezout_phi: (0,0) does not generate a subgroup of rank 1");
  if (t <= 0 && s <= 0) throw ContractError("bezout_phi: at least one of T, S must be positive");
  const auto [d, a, b] = extended_gcd(t, s);
  BezoutPhi out{};
  out.d = d;
  out.t1 = t / d;
  out.s1 = s / d;
  // a·T1 + b·S1 = 1, so q = a, p = -b solves T1·q − S1·p = 1.
  Int q = a;
  Int p = checked_sub(0, b);
  // Bezout pairs differ by multiples of (T1, S1); fix p into [0, |T1|).
  if (out.t1 != 0) {
    const Int p_new = mod_floor(p, out.t1);
    const Int m = (p_new - p) / out.t1;
    p = p_new;
    q = checked_add(q, checked_mul(m, out.s1));
  } else {
    const Int q_new = mod_floor(q, out.s1);
    const Int m = (q_new - q) / out.s1;
    q = q_new;
    p = checked_add(p, checked_mul(m, out.t1));
  }
  out.p = p;
  out.q = q;
  out.phi = IntMatrix(2, 2);
  out.phi << out.t1, p, out.s1, q;
  return out;
}

}  // namespace pcf
