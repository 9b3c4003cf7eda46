#pragma once
#include <cmath>
#include <cstddef>
#include <vector>

namespace stokeslab {

// Double-double value: an unevaluated sum hi + lo with |lo| <= ulp(hi)/2,
// giving ~31 significant decimal digits. Used for Gramian/pencil solves whose
// conditioning exceeds what binary64 can represent (smallest eigenvalue down
// to ~1e-60 relative to the largest). Error-free transforms follow
// Dekker/Bailey; only the operations the solvers need are provided.
struct dd {
    double hi = 0.0, lo = 0.0;
    constexpr dd() = default;
    constexpr dd(double h) : hi(h), lo(0.0) {}
    constexpr dd(double h, double l) : hi(h), lo(l) {}
};

inline dd two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}
inline dd quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}
inline dd two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline dd operator+(dd a, dd b) {
    dd s = two_sum(a.hi, b.hi);
    dd t = two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return quick_two_sum(s.hi, s.lo);
}
inline dd operator-(dd a) { return {-a.hi, -a.lo}; }
inline dd operator-(dd a, dd b) { return a + (-b); }
inline dd operator*(dd a, dd b) {
    dd p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}
inline dd operator/(dd a, dd b) {
    double q1 = a.hi / b.hi;
    dd r = a - dd(q1) * b;
    double q2 = r.hi / b.hi;
    r = r - dd(q2) * b;
    double q3 = r.hi / b.hi;
    dd s = quick_two_sum(q1, q2);
    return s + dd(q3);
}
inline dd& operator+=(dd& a, dd b) { return a = a + b; }
inline dd& operator-=(dd& a, dd b) { return a = a - b; }
inline dd& operator*=(dd& a, dd b) { return a = a * b; }
inline bool operator<(dd a, dd b) { return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo); }
inline bool operator>(dd a, dd b) { return b < a; }
inline dd dd_abs(dd a) { return a.hi < 0 ? -a : a; }
inline double to_double(dd a) { return a.hi + a.lo; }

// sqrt via one Newton step on the reciprocal-root seed; exact to dd precision
// for positive input, 0 for nonpositive.
inline dd dd_sqrt(dd a) {
    if (a.hi <= 0) return {0.0, 0.0};
    double x = 1.0 / std::sqrt(a.hi);
    double ax = a.hi * x;
    dd err = a - two_prod(ax, ax);
    return quick_two_sum(ax, err.hi * (x * 0.5));
}

inline constexpr dd DD_LN2{6.931471805599452862e-01, 2.319046813846299558e-17};

// exp by argument reduction x = k*ln2 + r, Taylor on |r| <= ln2/2, scaling by
// 2^k. Saturates to 0 / HUGE_VAL outside the binary64 exponent range.
dd dd_exp(dd x);

// (1 - e^{-x})/x for x >= 0, series below x = 1/2 so the x -> 0 limit is
// cancellation-free. This is the time-integral kernel of every Gramian entry.
dd dd_one_minus_exp_over(dd x);

// log of a positive dd as a double; lo enters as a first-order correction.
double dd_log_to_double(dd x);

// Dense symmetric dd matrix, row-major.
struct ddmat {
    int n = 0;
    std::vector<dd> a;
    explicit ddmat(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_) {}
    dd& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    const dd& at(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

// In-place lower Cholesky. Returns false on a nonpositive pivot (matrix not
// positive definite at dd working precision); callers decide how to react.
bool dd_cholesky(ddmat& a);

// Solve L L^T x = b given the factor from dd_cholesky.
std::vector<dd> dd_cholesky_solve(const ddmat& l, const std::vector<dd>& b);

// B = L^{-1} diag(d) L^{-T}: congruence that turns the generalized symmetric
// problem diag(d) v = lambda W v into an ordinary symmetric one.
ddmat dd_congruence_diag(const ddmat& l, const std::vector<dd>& d);

// Eigenvalues of a symmetric dd matrix by cyclic Jacobi (matrix destroyed).
// Off-diagonal norm is driven below 1e-31 of the Frobenius norm.
std::vector<dd> dd_jacobi_eigenvalues(ddmat& a, int max_sweeps = 40);

}  // namespace stokeslab
