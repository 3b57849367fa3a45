#pragma once

namespace iris::nn {

/// C = alpha * op(A) * op(B) + beta * C, row-major. A is m x k (after
/// transposition), B is k x n, C is m x n. Dispatches to BLAS.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
          const float* b, float beta, float* c);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
          const double* b, double beta, double* c);

}  // namespace iris::nn
