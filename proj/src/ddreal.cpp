#include "stokeslab/ddreal.hpp"

namespace stokeslab {

dd dd_exp(dd x) {
    if (x.hi <= -709.0) return {0.0, 0.0};
    if (x.hi >= 709.0) return {HUGE_VAL, 0.0};
    double k = std::nearbyint(x.hi / DD_LN2.hi);
    dd r = x - dd(k) * DD_LN2;
    dd sum{1.0, 0.0};
    dd term{1.0, 0.0};
    for (int i = 1; i <= 26; i++) {
        term = term * r / dd(static_cast<double>(i));
        sum += term;
        if (std::fabs(term.hi) < 1e-35 * std::fabs(sum.hi)) break;
    }
    int ik = static_cast<int>(k);
    return {std::ldexp(sum.hi, ik), std::ldexp(sum.lo, ik)};
}

dd dd_one_minus_exp_over(dd x) {
    if (x.hi < 0.5) {
        dd sum{1.0, 0.0};
        dd term{1.0, 0.0};
        for (int i = 1; i <= 30; i++) {
            term = term * (-x) / dd(i + 1.0);
            sum += term;
            if (std::fabs(term.hi) < 1e-35 * std::fabs(sum.hi)) break;
        }
        return sum;
    }
    return (dd(1.0) - dd_exp(-x)) / x;
}

double dd_log_to_double(dd x) {
    double l = std::log(x.hi);
    return l + x.lo / x.hi;
}

bool dd_cholesky(ddmat& a) {
    int n = a.n;
    for (int j = 0; j < n; j++) {
        dd d = a.at(j, j);
        for (int k = 0; k < j; k++) d -= a.at(j, k) * a.at(j, k);
        if (!(d.hi > 0)) return false;
        dd r = dd_sqrt(d);
        a.at(j, j) = r;
        for (int i = j + 1; i < n; i++) {
            dd s = a.at(i, j);
            for (int k = 0; k < j; k++) s -= a.at(i, k) * a.at(j, k);
            a.at(i, j) = s / r;
        }
        for (int i = 0; i < j; i++) a.at(i, j) = dd(0.0);
    }
    return true;
}

std::vector<dd> dd_cholesky_solve(const ddmat& l, const std::vector<dd>& b) {
    int n = l.n;
    std::vector<dd> y(n);
    for (int i = 0; i < n; i++) {
        dd s = b[i];
        for (int k = 0; k < i; k++) s -= l.at(i, k) * y[k];
        y[i] = s / l.at(i, i);
    }
    std::vector<dd> x(n);
    for (int i = n - 1; i >= 0; i--) {
        dd s = y[i];
        for (int k = i + 1; k < n; k++) s -= l.at(k, i) * x[k];
        x[i] = s / l.at(i, i);
    }
    return x;
}

ddmat dd_congruence_diag(const ddmat& l, const std::vector<dd>& d) {
    int n = l.n;
    ddmat m(n);  // m = L^{-1} diag(d): forward solve per column
    for (int c = 0; c < n; c++) {
        for (int i = 0; i < n; i++) {
            dd s = (i == c) ? d[c] : dd(0.0);
            for (int k = 0; k < i; k++) s -= l.at(i, k) * m.at(k, c);
            m.at(i, c) = s / l.at(i, i);
        }
    }
    ddmat b(n);  // b = L^{-1} m^T
    for (int c = 0; c < n; c++) {
        for (int i = 0; i < n; i++) {
            dd s = m.at(c, i);
            for (int k = 0; k < i; k++) s -= l.at(i, k) * b.at(k, c);
            b.at(i, c) = s / l.at(i, i);
        }
    }
    for (int i = 0; i < n; i++)
        for (int j = i + 1; j < n; j++) {
            dd mean = (b.at(i, j) + b.at(j, i)) * dd(0.5);
            b.at(i, j) = b.at(j, i) = mean;
        }
    return b;
}

std::vector<dd> dd_jacobi_eigenvalues(ddmat& a, int max_sweeps) {
    int n = a.n;
    double fro = 0;
    for (auto& v : a.a) fro += v.hi * v.hi;
    fro = std::sqrt(fro);
    for (int sweep = 0; sweep < max_sweeps; sweep++) {
        double off = 0;
        for (int p = 0; p < n; p++)
            for (int q = p + 1; q < n; q++) off += a.at(p, q).hi * a.at(p, q).hi;
        if (std::sqrt(off) <= 1e-31 * fro) break;
        for (int p = 0; p < n; p++)
            for (int q = p + 1; q < n; q++) {
                dd apq = a.at(p, q);
                if (std::fabs(apq.hi) <= 1e-33 * fro) continue;
                dd app = a.at(p, p), aqq = a.at(q, q);
                dd theta = (aqq - app) / (dd(2.0) * apq);
                dd t;
                {
                    dd at = dd_abs(theta);
                    dd den = at + dd_sqrt(at * at + dd(1.0));
                    t = dd(1.0) / den;
                    if (theta.hi < 0) t = -t;
                }
                dd c = dd(1.0) / dd_sqrt(t * t + dd(1.0));
                dd s = t * c;
                for (int k = 0; k < n; k++) {
                    dd akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; k++) {
                    dd apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                a.at(p, q) = a.at(q, p) = dd(0.0);
            }
    }
    std::vector<dd> ev(n);
    for (int i = 0; i < n; i++) ev[i] = a.at(i, i);
    return ev;
}

}  // namespace stokeslab
