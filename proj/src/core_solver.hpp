#pragma once

// Weighted low-rank PSD approximation of the core PMI block:
//   min_V || G - V^T V ||_W   (rank <= d, weights in [0, 1])
// solved by EM / block coordinate descent: fill the unweighted part of G
// with the current approximation, then project onto the rank-d PSD cone with
// a truncated eigendecomposition.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "embedding_set.hpp"
#include "statistics.hpp"

namespace psdvec {

struct CoreSolveConfig {
  std::size_t dim = 50;
  int max_iters = 20;
  double tol = 1e-4;  // stop when the weighted residual drops by less than tol * previous
  void validate(std::size_t core_size) const;
};

struct SolveDiagnostics {
  // residuals[0] is the residual of the zero start; residuals[t] follows iteration t.
  std::vector<double> residuals;
  int iterations = 0;
  bool converged = false;
};

// sum_ij W_ij (G_ij - X_ij)^2
double weighted_frobenius(const Eigen::MatrixXd& G, const Eigen::MatrixXd& X, const Eigen::MatrixXd& W);

struct PsdTruncation {
  Eigen::MatrixXd factor;       // d x n, row k = sqrt(max(lambda_k, 0)) * u_k^T
  Eigen::MatrixXd approx;       // n x n, factor^T * factor
  Eigen::VectorXd eigenvalues;  // d largest eigenvalues of S, descending, unclamped
};

// Keeps the d largest eigenpairs of the symmetrized S with eigenvalues
// clamped at 0. Each eigenvector's largest-magnitude entry is made positive.
PsdTruncation psd_truncate(const Eigen::MatrixXd& S, std::size_t d);

struct CoreSolution {
  Eigen::MatrixXd factor;  // d x n; column i is the embedding of core word i
  Eigen::MatrixXd approx;  // final X
  SolveDiagnostics diagnostics;
};

using IterationCallback = std::function<void(int iteration, double residual)>;

CoreSolution em_factorize(const Eigen::MatrixXd& G, const Eigen::MatrixXd& W, const CoreSolveConfig& cfg,
                          const IterationCallback& on_iteration = {});

// Block-typed entry point: returns the core embeddings named by `words`.
EmbeddingSet em_factorize(const PmiBlock& G, const WeightBlock& W, const std::vector<std::string>& words,
                          const CoreSolveConfig& cfg, SolveDiagnostics* diagnostics = nullptr,
                          const IterationCallback& on_iteration = {});

EmbeddingSet core_embeddings(const std::vector<std::string>& words, const Eigen::MatrixXd& factor);

}  // namespace psdvec
