#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "common.hpp"

namespace hetcov {

// Compressed sparse rows with real values.
struct CsrMatrix {
  int rows = 0, cols = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> val;

  std::int64_t nnz() const { return static_cast<std::int64_t>(val.size()); }
  void multiply(const cplx* x, cplx* y) const;
  void multiply(const double* x, double* y) const;
  VecR diagonal() const;
  MatR dense() const;
};

using ComplexOperator = std::function<void(const VecC& in, VecC& out)>;
using RealOperator = std::function<void(const VecR& in, VecR& out)>;

struct CGOptions {
  double tol = 1e-8;           // relative residual target
  int max_iter = 200;
  const VecR* jacobi = nullptr;  // optional diagonal preconditioner
  // Stop early when the residual improves by less than this factor over `stagnation_window` iterations.
  double stagnation_improvement = 0.0;
  int stagnation_window = 50;
  bool keep_trace = false;
};

struct CGReport {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
  bool stagnated = false;
  double min_rayleigh = 0.0;  // smallest p^H A p / p^H p seen
  std::vector<double> trace;
};

// Conjugate gradients for a Hermitian positive definite operator. x holds the
// initial guess on entry and the solution on exit.
CGReport conjugate_gradient(const ComplexOperator& A, const VecC& b, VecC& x, const CGOptions& opt);

struct LanczosReport {
  double lambda_min = 0.0, lambda_max = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Extremal eigenvalues of a real symmetric operator, full reorthogonalization.
LanczosReport lanczos_extremes(const RealOperator& A, int dim, double tol, int max_iter, std::uint64_t seed);
// Same for a Hermitian operator on complex vectors.
LanczosReport lanczos_extremes(const ComplexOperator& A, int dim, double tol, int max_iter, std::uint64_t seed);

}  // namespace hetcov
