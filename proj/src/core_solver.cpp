#include "core_solver.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace psdvec {

void CoreSolveConfig::validate(std::size_t core_size) const {
  if (dim < 1) throw PreconditionError("embedding dimension must be >= 1");
  if (dim > core_size)
    throw PreconditionError("embedding dimension " + std::to_string(dim) + " exceeds core size " +
                            std::to_string(core_size));
  if (max_iters < 1) throw PreconditionError("max_iters must be >= 1");
  if (!(tol > 0.0)) throw PreconditionError("tol must be > 0");
}

double weighted_frobenius(const Eigen::MatrixXd& G, const Eigen::MatrixXd& X, const Eigen::MatrixXd& W) {
  if (G.rows() != X.rows() || G.cols() != X.cols() || G.rows() != W.rows() || G.cols() != W.cols())
    throw DomainError("weighted_frobenius: shape mismatch");
  return (W.array() * (G - X).array().square()).sum();
}

namespace {

std::string condition_report(const Eigen::MatrixXd& S) {
  std::ostringstream os;
  os << "n=" << S.rows() << " finite=" << (S.allFinite() ? "yes" : "no");
  if (S.allFinite() && S.size() > 0)
    os << " max|s|=" << S.cwiseAbs().maxCoeff() << " frobenius=" << S.norm();
  return os.str();
}

}  // namespace

PsdTruncation psd_truncate(const Eigen::MatrixXd& S, std::size_t d) {
  const Eigen::Index n = S.rows();
  if (S.cols() != n) throw DomainError("psd_truncate: matrix is not square");
  if (d < 1 || static_cast<Eigen::Index>(d) > n)
    throw DomainError("psd_truncate: rank " + std::to_string(d) + " outside [1, " + std::to_string(n) + "]");
  if (!S.allFinite()) throw NumericalError("psd_truncate: non-finite input (" + condition_report(S) + ")");
  const double scale = 1.0 + S.cwiseAbs().maxCoeff();
  const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    throw PreconditionError("psd_truncate: matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");

  Eigen::MatrixXd work = 0.5 * (S + S.transpose());
  const auto k = static_cast<lapack_int>(d);
  const auto nn = static_cast<lapack_int>(n);
  Eigen::VectorXd w(n);
  Eigen::MatrixXd Z(n, k);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(k));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', nn, work.data(), nn, 0.0, 0.0,
                                         nn - k + 1, nn, 0.0, &found, w.data(), Z.data(), nn, support.data());
  if (info != 0 || found != k)
    throw NumericalError("psd_truncate: eigensolver failed (info=" + std::to_string(info) + ", " +
                         condition_report(S) + ")");

  PsdTruncation out;
  out.eigenvalues.resize(k);
  out.factor.resize(k, n);
  for (lapack_int r = 0; r < k; ++r) {
    // dsyevr returns ascending order; emit descending.
    const lapack_int src = k - 1 - r;
    Eigen::VectorXd u = Z.col(src);
    Eigen::Index arg = 0;
    u.cwiseAbs().maxCoeff(&arg);
    if (u(arg) < 0) u = -u;
    const double lambda = w(src);
    out.eigenvalues(r) = lambda;
    out.factor.row(r) = std::sqrt(std::max(lambda, 0.0)) * u.transpose();
  }
  out.approx.noalias() = out.factor.transpose() * out.factor;
  return out;
}

CoreSolution em_factorize(const Eigen::MatrixXd& G, const Eigen::MatrixXd& W, const CoreSolveConfig& cfg,
                          const IterationCallback& on_iteration) {
  const Eigen::Index n = G.rows();
  if (G.cols() != n || W.rows() != n || W.cols() != n) throw DomainError("em_factorize: shape mismatch");
  cfg.validate(static_cast<std::size_t>(n));
  if (!G.allFinite() || !W.allFinite()) throw PreconditionError("em_factorize: non-finite input");
  if (W.minCoeff() < 0.0 || W.maxCoeff() > 1.0) throw PreconditionError("em_factorize: weights must lie in [0, 1]");
  const double gscale = 1.0 + G.cwiseAbs().maxCoeff();
  if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-10 * gscale)
    throw PreconditionError("em_factorize: G is not symmetric");

  CoreSolution sol;
  sol.approx = Eigen::MatrixXd::Zero(n, n);
  sol.factor = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.dim), n);
  auto& diag = sol.diagnostics;
  const double start = weighted_frobenius(G, sol.approx, W);
  diag.residuals.push_back(start);

  Eigen::MatrixXd Y(n, n);
  for (int t = 1; t <= cfg.max_iters; ++t) {
    Y = sol.approx + W.cwiseProduct(G - sol.approx);
    PsdTruncation step = psd_truncate(Y, cfg.dim);
    const double prev = diag.residuals.back();
    const double r = weighted_frobenius(G, step.approx, W);
    sol.factor = std::move(step.factor);
    sol.approx = std::move(step.approx);
    diag.residuals.push_back(r);
    diag.iterations = t;
    if (on_iteration) on_iteration(t, r);
    // Fitted to roundoff, or the descent has stalled.
    if (r <= 1e-24 * start || prev - r <= cfg.tol * prev) {
      diag.converged = true;
      break;
    }
  }
  return sol;
}

EmbeddingSet core_embeddings(const std::vector<std::string>& words, const Eigen::MatrixXd& factor) {
  if (static_cast<Eigen::Index>(words.size()) != factor.cols())
    throw DomainError("core_embeddings: word count does not match factor columns");
  RowMatrix vectors = factor.transpose();
  return EmbeddingSet(words, std::move(vectors));
}

EmbeddingSet em_factorize(const PmiBlock& G, const WeightBlock& W, const std::vector<std::string>& words,
                          const CoreSolveConfig& cfg, SolveDiagnostics* diagnostics,
                          const IterationCallback& on_iteration) {
  if (!(G.rows == W.rows && G.cols == W.cols)) throw DomainError("PMI and weight blocks cover different ranges");
  if (!(G.rows == G.cols)) throw DomainError("core block must be square over one index range");
  CoreSolution sol = em_factorize(G.values, W.values, cfg, on_iteration);
  if (diagnostics) *diagnostics = sol.diagnostics;
  return core_embeddings(words, sol.factor);
}

}  // namespace psdvec
