#pragma once

// Incremental learning of noncore embeddings. The core embeddings V1 stay
// fixed; every noncore word is an independent weighted ridge regression
// against its PMI row over the core words:
//
//   J(v) = 2 * sum_j w_j (g_j - v_j^T v)^2 + mu * |v|^2
//
// The factor 2 folds the two symmetric core/noncore blocks into one sum.
// Noncore-noncore blocks are never built.

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "embedding_set.hpp"
#include "statistics.hpp"

namespace psdvec {

struct VocabPartition {
  // groups[0] is the core; the rest are noncore groups in frequency order.
  std::vector<IndexRange> groups;

  const IndexRange& core() const { return groups.front(); }
  std::size_t noncore_groups() const { return groups.empty() ? 0 : groups.size() - 1; }
};

VocabPartition partition_vocabulary(std::size_t vocab_size, std::size_t core_size,
                                    std::span<const std::size_t> group_sizes, std::size_t dim);

struct MuSchedule {
  std::vector<double> per_group;  // one value per noncore group, non-decreasing
  // Optional override, called with (vocabulary index, group value).
  std::function<double(std::uint32_t, double)> per_word;

  void validate(std::size_t groups) const;
};

// Supplies the PMI row g and weight row w of one word against the core words.
class RowSource {
 public:
  virtual ~RowSource() = default;
  virtual std::size_t core_size() const = 0;
  virtual void build(std::uint32_t word, std::span<double> g, std::span<double> w) const = 0;
};

class TableRowSource final : public RowSource {
 public:
  explicit TableRowSource(const CoreRowBuilder& builder) : builder_(builder) {}
  std::size_t core_size() const override { return builder_.core_size(); }
  void build(std::uint32_t word, std::span<double> g, std::span<double> w) const override {
    builder_.build(word, g, w);
  }

 private:
  const CoreRowBuilder& builder_;
};

// Closed-form solver for one word at a time. Holds only d x d workspace; the
// core matrix is borrowed.
class NoncoreSolver {
 public:
  // core: c x d, row j is the embedding of core word j.
  explicit NoncoreSolver(const RowMatrix& core);

  std::size_t core_size() const { return static_cast<std::size_t>(core_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(core_.cols()); }

  // Writes the minimizer of J into `out`. Returns true when mu = 0 and the
  // weighted normal matrix is singular; `out` is then the minimum-norm solution.
  bool solve(std::span<const double> g, std::span<const double> w, double mu, std::span<double> out);

 private:
  const RowMatrix& core_;
  Eigen::MatrixXd normal_;
  Eigen::VectorXd rhs_;
  Eigen::VectorXd solution_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_;
};

struct NoncoreWordSolution {
  Eigen::VectorXd vector;
  bool degenerate = false;
};

NoncoreWordSolution solve_noncore_word(std::span<const double> g, std::span<const double> w, const RowMatrix& core,
                                       double mu);

// Objective J(v) and its gradient, exposed for diagnostics and tests.
double noncore_objective(std::span<const double> g, std::span<const double> w, const RowMatrix& core, double mu,
                         const Eigen::VectorXd& v);
Eigen::VectorXd noncore_gradient(std::span<const double> g, std::span<const double> w, const RowMatrix& core,
                                 double mu, const Eigen::VectorXd& v);

// Streams solutions for `words` in order; no per-word state outlives the
// sink call. Returns the number of degenerate solves.
using VectorSink = std::function<void(std::uint32_t word, std::span<const double> vector)>;
std::size_t solve_noncore_stream(const RowMatrix& core, const RowSource& rows, std::span<const std::uint32_t> words,
                                 double mu, const VectorSink& sink);

struct GroupReport {
  IndexRange range;
  double mu = 0.0;
  std::size_t words = 0;
  std::size_t degenerate = 0;
  double seconds = 0.0;
};

struct NoncoreReport {
  std::vector<GroupReport> groups;
  std::size_t degenerate() const;
  std::string to_text() const;
};

// Solves every noncore group of `partition`. Word i of the vocabulary is
// named vocab.word(i). Results do not depend on `threads`.
EmbeddingSet block_factorize(const EmbeddingSet& core, const RowSource& rows, const Vocabulary& vocab,
                             const VocabPartition& partition, const MuSchedule& schedule, unsigned threads = 1,
                             NoncoreReport* report = nullptr);

// Solves an explicit list of vocabulary indices with one mu.
EmbeddingSet solve_noncore_group(const EmbeddingSet& core, const RowSource& rows, const Vocabulary& vocab,
                                 std::span<const std::uint32_t> words, double mu, unsigned threads = 1,
                                 GroupReport* report = nullptr,
                                 const std::function<double(std::uint32_t, double)>& per_word = {});

EmbeddingSet combine(const EmbeddingSet& core, const std::vector<EmbeddingSet>& noncore);

}  // namespace psdvec
