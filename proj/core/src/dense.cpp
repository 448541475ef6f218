#include "smoothfbo/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace smoothfbo {

void require_same_size(const Vec64& x, const Vec64& y, std::string_view what) {
  if (x.size() != y.size()) {
    throw ShapeError(std::string(what) + ": size mismatch " +
                     std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
}

void require_size(const Vec64& x, std::size_t n, std::string_view what) {
  if (x.size() != n) {
    throw ShapeError(std::string(what) + ": expected size " + std::to_string(n) +
                     ", got " + std::to_string(x.size()));
  }
}

bool all_finite(const Vec64& x) {
  return std::all_of(x.begin(), x.end(),
                     [](double v) { return std::isfinite(v); });
}

Vec64 add(const Vec64& x, const Vec64& y) {
  require_same_size(x, y, "add");
  Vec64 out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return out;
}

Vec64 sub(const Vec64& x, const Vec64& y) {
  require_same_size(x, y, "sub");
  Vec64 out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return out;
}

Vec64 scaled(const Vec64& x, double s) {
  Vec64 out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * s;
  return out;
}

void axpy_inplace(Vec64& y, double alpha, const Vec64& x) {
  require_same_size(y, x, "axpy");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

double dot(const Vec64& x, const Vec64& y) {
  require_same_size(x, y, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2sq(const Vec64& x) { return dot(x, x); }

double norm2(const Vec64& x) { return std::sqrt(norm2sq(x)); }

Vec64 matvec(const Mat64& m, const Vec64& x) {
  if (x.size() != m.cols) {
    throw ShapeError("matvec: matrix is " + std::to_string(m.rows) + "x" +
                     std::to_string(m.cols) + ", vector has size " +
                     std::to_string(x.size()));
  }
  Vec64 out(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double s = 0.0;
    const double* row = m.a.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
  return out;
}

Vec64 matvec_transpose(const Mat64& m, const Vec64& y) {
  if (y.size() != m.rows) {
    throw ShapeError("matvec_transpose: matrix is " + std::to_string(m.rows) +
                     "x" + std::to_string(m.cols) + ", vector has size " +
                     std::to_string(y.size()));
  }
  Vec64 out(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.a.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c] * y[r];
  }
  return out;
}

void add_outer_inplace(Mat64& m, const Vec64& u, const Vec64& v, double scale) {
  if (u.size() != m.rows || v.size() != m.cols) {
    throw ShapeError("add_outer: matrix is " + std::to_string(m.rows) + "x" +
                     std::to_string(m.cols) + ", vectors are " +
                     std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) += scale * u[r] * v[c];
  }
}

Vec64 solve_lu(Mat64 a, Vec64 b) {
  if (a.rows != a.cols) throw ShapeError("solve_lu: matrix not square");
  if (b.size() != a.rows) {
    throw ShapeError("solve_lu: rhs size " + std::to_string(b.size()) +
                     " vs matrix dim " + std::to_string(a.rows));
  }
  const std::size_t n = a.rows;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::fabs(a(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      const double cand = std::fabs(a(r, k));
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (!(best > 0.0) || !std::isfinite(best)) {
      throw SingularError("solve_lu: singular pivot at column " + std::to_string(k));
    }
    if (piv != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(piv, c));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a(r, k) / a(k, k);
      a(r, k) = 0.0;
      if (f == 0.0) continue;
      for (std::size_t c = k + 1; c < n; ++c) a(r, c) -= f * a(k, c);
      b[r] -= f * b[k];
    }
  }
  Vec64 x(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a(ri, c) * x[c];
    x[ri] = s / a(ri, ri);
  }
  return x;
}

Vec64 jacobi_eigenvalues(Mat64 m, int max_sweeps) {
  if (m.rows != m.cols) throw ShapeError("jacobi: matrix not square");
  const std::size_t n = m.rows;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = r + 1; c < n; ++c) off += m(r, c) * m(r, c);
    }
    if (off < 1e-28) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }
  Vec64 ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = m(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

Mat64 gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                      double mean, double stddev) {
  Mat64 out(rows, cols);
  for (double& v : out.a) v = rng.gaussian(mean, stddev);
  return out;
}

}  // namespace smoothfbo
