#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "smoothfbo/errors.hpp"
#include "smoothfbo/rng.hpp"

namespace smoothfbo {

// Flat double storage. All shape checking lives in the free functions below,
// which throw ShapeError on any dimension mismatch.
using Vec64 = std::vector<double>;

// Row-major dense matrix.
struct Mat64 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat64() = default;
  Mat64(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

void require_same_size(const Vec64& x, const Vec64& y, std::string_view what);
void require_size(const Vec64& x, std::size_t n, std::string_view what);

bool all_finite(const Vec64& x);

Vec64 add(const Vec64& x, const Vec64& y);
Vec64 sub(const Vec64& x, const Vec64& y);
Vec64 scaled(const Vec64& x, double s);

// y += alpha * x
void axpy_inplace(Vec64& y, double alpha, const Vec64& x);

double dot(const Vec64& x, const Vec64& y);
double norm2sq(const Vec64& x);
double norm2(const Vec64& x);

// A * x and A^T * y with hard shape checks.
Vec64 matvec(const Mat64& m, const Vec64& x);
Vec64 matvec_transpose(const Mat64& m, const Vec64& y);

// m += scale * u v^T
void add_outer_inplace(Mat64& m, const Vec64& u, const Vec64& v, double scale);

// Dense solve via LU with partial pivoting. Throws SingularError when a pivot
// collapses to ~0. Intended for the small systems this project needs
// (adjoint and inner exact solves, dimension <= a few dozen).
Vec64 solve_lu(Mat64 a, Vec64 b);

// All eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
Vec64 jacobi_eigenvalues(Mat64 sym, int max_sweeps = 64);

// rows x cols matrix with iid N(mean, stddev^2) entries drawn from rng in
// row-major order. stddev = 0 degenerates to a constant matrix.
Mat64 gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols,
                      double mean = 0.0, double stddev = 1.0);

}  // namespace smoothfbo
