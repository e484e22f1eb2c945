#include "incremental_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "errors.hpp"

namespace psdvec {

VocabPartition partition_vocabulary(std::size_t vocab_size, std::size_t core_size,
                                    std::span<const std::size_t> group_sizes, std::size_t dim) {
  if (core_size < dim)
    throw DomainError("core size " + std::to_string(core_size) + " is smaller than dimension " + std::to_string(dim));
  if (core_size == 0) throw DomainError("core size must be positive");
  VocabPartition p;
  std::size_t at = 0;
  auto push = [&](std::size_t size) {
    if (size == 0) throw DomainError("partition groups must be nonempty");
    if (size > vocab_size - at)
      throw DomainError("partition needs more than the " + std::to_string(vocab_size) + " vocabulary words");
    p.groups.push_back({at, at + size});
    at += size;
  };
  push(core_size);
  for (auto s : group_sizes) push(s);
  return p;
}

void MuSchedule::validate(std::size_t groups) const {
  if (per_group.size() != groups)
    throw DomainError("mu schedule has " + std::to_string(per_group.size()) + " entries for " +
                      std::to_string(groups) + " noncore groups");
  for (std::size_t k = 0; k < per_group.size(); ++k) {
    if (!(per_group[k] >= 0.0) || !std::isfinite(per_group[k])) throw DomainError("mu must be finite and >= 0");
    if (k > 0 && per_group[k] < per_group[k - 1]) throw DomainError("mu schedule must be non-decreasing");
  }
}

NoncoreSolver::NoncoreSolver(const RowMatrix& core)
    : core_(core),
      normal_(core.cols(), core.cols()),
      rhs_(core.cols()),
      solution_(core.cols()),
      llt_(core.cols()),
      eig_(core.cols()) {}

bool NoncoreSolver::solve(std::span<const double> g, std::span<const double> w, double mu, std::span<double> out) {
  const auto c = core_.rows();
  const auto d = core_.cols();
  if (static_cast<Eigen::Index>(g.size()) != c || static_cast<Eigen::Index>(w.size()) != c)
    throw DomainError("noncore row length does not match core size");
  if (static_cast<Eigen::Index>(out.size()) != d) throw DomainError("output length does not match dimension");
  if (!(mu >= 0.0)) throw DomainError("mu must be >= 0");

  normal_.setZero();
  rhs_.setZero();
  for (Eigen::Index j = 0; j < c; ++j) {
    const double wj = w[static_cast<std::size_t>(j)];
    if (wj == 0.0) continue;
    if (wj < 0.0) throw DomainError("negative weight in noncore row");
    const auto vj = core_.row(j).transpose();
    normal_.selfadjointView<Eigen::Lower>().rankUpdate(vj, 2.0 * wj);
    rhs_.noalias() += (2.0 * wj * g[static_cast<std::size_t>(j)]) * vj;
  }
  normal_.diagonal().array() += mu;

  bool degenerate = false;
  if (mu > 0.0) {
    llt_.compute(normal_);
    if (llt_.info() != Eigen::Success) throw NumericalError("noncore normal matrix is not positive definite");
    solution_ = llt_.solve(rhs_);
  } else {
    eig_.compute(normal_);
    if (eig_.info() != Eigen::Success) throw NumericalError("noncore eigensolver failed");
    const auto& lambda = eig_.eigenvalues();
    const double cutoff = std::max(lambda.cwiseAbs().maxCoeff(), 0.0) * 1e-12;
    const Eigen::VectorXd proj = eig_.eigenvectors().transpose() * rhs_;
    Eigen::VectorXd scaled(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      if (lambda(k) > cutoff && lambda(k) > 0.0) {
        scaled(k) = proj(k) / lambda(k);
      } else {
        scaled(k) = 0.0;
        degenerate = true;
      }
    }
    solution_.noalias() = eig_.eigenvectors() * scaled;
  }
  std::copy(solution_.data(), solution_.data() + d, out.begin());
  return degenerate;
}

NoncoreWordSolution solve_noncore_word(std::span<const double> g, std::span<const double> w, const RowMatrix& core,
                                       double mu) {
  NoncoreSolver solver(core);
  NoncoreWordSolution s;
  s.vector.resize(core.cols());
  s.degenerate = solver.solve(g, w, mu, {s.vector.data(), static_cast<std::size_t>(s.vector.size())});
  return s;
}

double noncore_objective(std::span<const double> g, std::span<const double> w, const RowMatrix& core, double mu,
                         const Eigen::VectorXd& v) {
  double j = mu * v.squaredNorm();
  for (Eigen::Index k = 0; k < core.rows(); ++k) {
    const double r = g[static_cast<std::size_t>(k)] - core.row(k).dot(v);
    j += 2.0 * w[static_cast<std::size_t>(k)] * r * r;
  }
  return j;
}

Eigen::VectorXd noncore_gradient(std::span<const double> g, std::span<const double> w, const RowMatrix& core,
                                 double mu, const Eigen::VectorXd& v) {
  Eigen::VectorXd grad = 2.0 * mu * v;
  for (Eigen::Index k = 0; k < core.rows(); ++k) {
    const double r = g[static_cast<std::size_t>(k)] - core.row(k).dot(v);
    grad -= 4.0 * w[static_cast<std::size_t>(k)] * r * core.row(k).transpose();
  }
  return grad;
}

std::size_t solve_noncore_stream(const RowMatrix& core, const RowSource& rows, std::span<const std::uint32_t> words,
                                 double mu, const VectorSink& sink) {
  if (rows.core_size() != static_cast<std::size_t>(core.rows()))
    throw DomainError("row source and core embeddings disagree on core size");
  NoncoreSolver solver(core);
  std::vector<double> g(rows.core_size()), w(rows.core_size()), v(static_cast<std::size_t>(core.cols()));
  std::size_t degenerate = 0;
  for (auto word : words) {
    rows.build(word, g, w);
    if (solver.solve(g, w, mu, v)) ++degenerate;
    sink(word, v);
  }
  return degenerate;
}

EmbeddingSet solve_noncore_group(const EmbeddingSet& core, const RowSource& rows, const Vocabulary& vocab,
                                 std::span<const std::uint32_t> words, double mu, unsigned threads,
                                 GroupReport* report, const std::function<double(std::uint32_t, double)>& per_word) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw DomainError("mu must be finite and >= 0");
  if (rows.core_size() != core.size()) throw DomainError("row source and core embeddings disagree on core size");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = words.size();
  const std::size_t d = core.dim();
  RowMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<std::string> names;
  names.reserve(n);
  for (auto word : words) {
    if (word >= vocab.size()) throw DomainError("noncore word index outside vocabulary");
    names.push_back(vocab.word(word));
  }

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::size_t> degenerate(threads, 0);
  std::vector<std::exception_ptr> failures(threads);
  auto work = [&](unsigned shard, std::size_t begin, std::size_t end) {
    try {
      NoncoreSolver solver(core.vectors());
      std::vector<double> g(rows.core_size()), w(rows.core_size());
      for (std::size_t i = begin; i < end; ++i) {
        rows.build(words[i], g, w);
        const double m = per_word ? per_word(words[i], mu) : mu;
        auto row = out.row(static_cast<Eigen::Index>(i));
        if (solver.solve(g, w, m, {row.data(), d})) ++degenerate[shard];
      }
    } catch (...) {
      failures[shard] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0, 0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned s = 0; s < threads; ++s)
      pool.emplace_back(work, s, std::min(n, s * chunk), std::min(n, (s + 1) * chunk));
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);

  if (report) {
    report->mu = mu;
    report->words = n;
    report->degenerate = 0;
    for (auto k : degenerate) report->degenerate += k;
    report->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (n > 0) report->range = {words.front(), static_cast<std::size_t>(words.back()) + 1};
  }
  return EmbeddingSet(std::move(names), std::move(out));
}

EmbeddingSet block_factorize(const EmbeddingSet& core, const RowSource& rows, const Vocabulary& vocab,
                             const VocabPartition& partition, const MuSchedule& schedule, unsigned threads,
                             NoncoreReport* report) {
  if (partition.groups.empty()) throw DomainError("empty vocabulary partition");
  schedule.validate(partition.noncore_groups());
  if (partition.core().size() != core.size())
    throw DomainError("core embeddings do not match the partition's core group");
  std::vector<EmbeddingSet> groups;
  NoncoreReport local;
  for (std::size_t k = 1; k < partition.groups.size(); ++k) {
    const auto range = partition.groups[k];
    std::vector<std::uint32_t> words(range.size());
    for (std::size_t i = 0; i < words.size(); ++i) words[i] = static_cast<std::uint32_t>(range.begin + i);
    GroupReport gr;
    groups.push_back(solve_noncore_group(core, rows, vocab, words, schedule.per_group[k - 1], threads, &gr,
                                         schedule.per_word));
    gr.range = range;
    local.groups.push_back(gr);
  }
  if (report) *report = local;
  if (groups.empty()) return EmbeddingSet(core.dim());
  return combine(EmbeddingSet(core.dim()), groups);
}

std::size_t NoncoreReport::degenerate() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.degenerate;
  return n;
}

std::string NoncoreReport::to_text() const {
  std::ostringstream os;
  os << "group\trange\twords\tmu\tdegenerate\tseconds\n";
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const auto& g = groups[k];
    os << (k + 2) << "\t[" << g.range.begin << "," << g.range.end << ")\t" << g.words << '\t' << g.mu << '\t'
       << g.degenerate << '\t' << g.seconds << '\n';
  }
  os << "degenerate_total=" << degenerate() << '\n';
  return os.str();
}

EmbeddingSet combine(const EmbeddingSet& core, const std::vector<EmbeddingSet>& noncore) {
  std::size_t total = core.size();
  for (const auto& s : noncore) {
    if (s.dim() != core.dim())
      throw DomainError("cannot combine embeddings of dimension " + std::to_string(s.dim()) + " and " +
                        std::to_string(core.dim()));
    total += s.size();
  }
  std::vector<std::string> words;
  words.reserve(total);
  RowMatrix vectors(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(core.dim()));
  std::unordered_set<std::string> seen;
  Eigen::Index at = 0;
  auto append = [&](const EmbeddingSet& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!seen.insert(s.word(i)).second) throw DomainError("duplicate word '" + s.word(i) + "' across sets");
      words.push_back(s.word(i));
    }
    if (s.size() > 0) vectors.middleRows(at, static_cast<Eigen::Index>(s.size())) = s.vectors();
    at += static_cast<Eigen::Index>(s.size());
  };
  append(core);
  for (const auto& s : noncore) append(s);
  return EmbeddingSet(std::move(words), std::move(vectors));
}

}  // namespace psdvec
