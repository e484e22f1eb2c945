#include <doctest.h>

#include <random>

#include "errors.hpp"
#include "incremental_solver.hpp"
#include "oracles.hpp"

using namespace psdvec;

namespace {

// Rows read from dense G/W blocks: row i of `g` is word (core + i)'s row.
class MatrixRowSource final : public RowSource {
 public:
  MatrixRowSource(Eigen::MatrixXd g, Eigen::MatrixXd w, std::size_t first) : g_(std::move(g)), w_(std::move(w)),
                                                                             first_(first) {}
  std::size_t core_size() const override { return static_cast<std::size_t>(g_.cols()); }
  void build(std::uint32_t word, std::span<double> g, std::span<double> w) const override {
    const auto r = static_cast<Eigen::Index>(word - first_);
    for (Eigen::Index k = 0; k < g_.cols(); ++k) {
      g[k] = g_(r, k);
      w[k] = w_(r, k);
    }
  }

 private:
  Eigen::MatrixXd g_, w_;
  std::size_t first_;
};

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Vocabulary numbered_vocab(std::size_t n) {
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  for (std::size_t i = 0; i < n; ++i) {
    std::string w = "w";
    std::size_t k = i;
    do {
      w += static_cast<char>('a' + k % 26);
      k /= 26;
    } while (k);
    words.push_back(w);
    counts.push_back(n - i);
  }
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  return Vocabulary(words, counts, total);
}

}  // namespace

TEST_CASE("partition_vocabulary") {
  const std::size_t sizes[] = {30, 30};
  const auto p = partition_vocabulary(100, 40, sizes, 10);
  REQUIRE(p.groups.size() == 3);
  CHECK(p.groups[0] == IndexRange{0, 40});
  CHECK(p.groups[1] == IndexRange{40, 70});
  CHECK(p.groups[2] == IndexRange{70, 100});

  const auto single = partition_vocabulary(10, 10, {}, 5);
  CHECK(single.groups.size() == 1);
  CHECK(single.noncore_groups() == 0);

  const std::size_t wiki[] = {55000, 50000, 50000};
  const auto w = partition_vocabulary(180000, 25000, wiki, 500);
  CHECK(w.groups[1] == IndexRange{25000, 80000});
  CHECK(w.groups[2] == IndexRange{80000, 130000});
  CHECK(w.groups[3] == IndexRange{130000, 180000});

  CHECK_THROWS_AS(partition_vocabulary(100, 4, {}, 5), DomainError);
  const std::size_t too_many[] = {200};
  CHECK_THROWS_AS(partition_vocabulary(100, 40, too_many, 5), DomainError);
}

TEST_CASE("MuSchedule validation") {
  auto check = [](std::vector<double> mus, std::size_t groups) {
    MuSchedule s;
    s.per_group = std::move(mus);
    s.validate(groups);
  };
  CHECK_NOTHROW(check({0.0, 2.0, 4.0}, 3));
  CHECK_THROWS_AS(check({2.0, 1.0}, 2), DomainError);
  CHECK_THROWS_AS(check({-1.0}, 1), DomainError);
  CHECK_THROWS_AS(check({1.0}, 2), DomainError);
}

TEST_CASE("solve_noncore_word hand cases") {
  SUBCASE("zero weights, positive mu: pure penalty") {
    const RowMatrix core = RowMatrix::Ones(3, 2);
    const std::vector<double> g{1, 2, 3}, w{0, 0, 0};
    const auto s = solve_noncore_word(g, w, core, 1.0);
    CHECK(s.vector.norm() == 0.0);
    CHECK_FALSE(s.degenerate);
  }
  SUBCASE("scalar case") {
    const RowMatrix core = RowMatrix::Ones(1, 1);
    const std::vector<double> g{2}, w{1};
    CHECK(solve_noncore_word(g, w, core, 2.0).vector(0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("huge mu shrinks to zero") {
    std::mt19937_64 rng(1);
    const RowMatrix core = oracle::random_matrix(rng, 10, 4);
    const auto g = to_vec(oracle::random_matrix(rng, 10, 1));
    const std::vector<double> w(10, 1.0);
    CHECK(solve_noncore_word(g, w, core, 1e9).vector.norm() < 1e-6);
  }
  SUBCASE("singular system at mu = 0 returns the minimum-norm solution") {
    RowMatrix core(2, 2);
    core << 1, 0, 2, 0;  // second coordinate is unconstrained
    const std::vector<double> g{1, 2}, w{1, 1};
    const auto s = solve_noncore_word(g, w, core, 0.0);
    CHECK(s.degenerate);
    CHECK(s.vector(0) == doctest::Approx(1.0));
    CHECK(std::abs(s.vector(1)) < 1e-12);
  }
  SUBCASE("row length mismatch") {
    const RowMatrix core = RowMatrix::Ones(3, 2);
    const std::vector<double> g{1, 2}, w{1, 1};
    CHECK_THROWS_AS(solve_noncore_word(g, w, core, 1.0), DomainError);
  }
}

TEST_CASE("solve_noncore_word matches the gradient-descent oracle and shrinks with mu") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 1 + static_cast<int>(rng() % 8);
    const int c = 1 + static_cast<int>(rng() % 30);
    const RowMatrix core = oracle::random_matrix(rng, c, d);
    const auto g = to_vec(oracle::random_matrix(rng, c, 1, -2.0, 2.0));
    std::vector<double> w(c);
    for (auto& x : w) x = u(rng) < 0.2 ? 0.0 : u(rng);
    double previous_norm = std::numeric_limits<double>::infinity();
    for (double mu : {0.0, 0.1, 1.0, 10.0}) {
      const auto s = solve_noncore_word(g, w, core, mu);
      const Eigen::VectorXd grad0 = noncore_gradient(g, w, core, mu, Eigen::VectorXd::Zero(d));
      const Eigen::VectorXd grad = noncore_gradient(g, w, core, mu, s.vector);
      if (!s.degenerate) CHECK(grad.norm() <= 1e-8 * (1.0 + grad0.norm()));
      const Eigen::VectorXd gd = oracle::ridge_gradient_descent(g, w, core, mu, 10000);
      CHECK(noncore_objective(g, w, core, mu, s.vector) <= oracle::ridge_objective(g, w, core, mu, gd) + 1e-10);
      CHECK(noncore_objective(g, w, core, mu, s.vector) ==
            doctest::Approx(oracle::ridge_objective(g, w, core, mu, s.vector)).epsilon(1e-12));
      CHECK(s.vector.norm() <= previous_norm + 1e-12);
      previous_norm = s.vector.norm();
    }
  }
}

TEST_CASE("incremental solutions reproduce an exact rank-d block") {
  std::mt19937_64 rng(3);
  const int d = 5, c = 40, m = 10;
  const Eigen::MatrixXd V = oracle::random_matrix(rng, d, c + m);
  const Eigen::MatrixXd G = V.transpose() * V;
  const RowMatrix core = V.leftCols(c).transpose();
  for (int i = 0; i < m; ++i) {
    const auto g = to_vec(G.block(c + i, 0, 1, c).transpose());
    const std::vector<double> w(c, 0.7);
    const auto s = solve_noncore_word(g, w, core, 0.0);
    const Eigen::VectorXd fit = core * s.vector;
    for (int j = 0; j < c; ++j) CHECK(std::abs(fit(j) - G(c + i, j)) < 1e-6);
  }
}

TEST_CASE("solve_noncore_stream emits words in order without retaining state") {
  std::mt19937_64 rng(4);
  const int d = 3, c = 12, m = 7;
  const RowMatrix core = oracle::random_matrix(rng, c, d);
  const Eigen::MatrixXd G = oracle::random_matrix(rng, m, c);
  const Eigen::MatrixXd W = oracle::random_matrix(rng, m, c, 0.0, 1.0);
  const MatrixRowSource rows(G, W, 100);
  std::vector<std::uint32_t> words;
  for (int i = 0; i < m; ++i) words.push_back(100 + i);
  std::vector<std::uint32_t> order;
  const auto degenerate = solve_noncore_stream(core, rows, words, 0.5, [&](std::uint32_t word, std::span<const double> v) {
    order.push_back(word);
    const auto r = word - 100;
    const auto s = solve_noncore_word(to_vec(G.row(r).transpose()), to_vec(W.row(r).transpose()), core, 0.5);
    for (int k = 0; k < d; ++k) CHECK(v[k] == s.vector(k));
  });
  CHECK(degenerate == 0);
  CHECK(order == words);
}

TEST_CASE("block_factorize: groups, schedule, threads and combine") {
  std::mt19937_64 rng(5);
  const std::size_t d = 4, c = 20, n = 50;
  const auto vocab = numbered_vocab(n);
  const Eigen::MatrixXd V = oracle::random_matrix(rng, d, n);
  const Eigen::MatrixXd G = V.transpose() * V;
  const Eigen::MatrixXd W = oracle::random_matrix(rng, n, c, 0.1, 1.0);
  const MatrixRowSource rows(G.bottomRows(n - c).leftCols(c), W.bottomRows(n - c), c);
  std::vector<std::string> core_words(vocab.words().begin(), vocab.words().begin() + c);
  const EmbeddingSet core(core_words, V.leftCols(c).transpose());

  const std::size_t sizes[] = {12, 18};
  const auto partition = partition_vocabulary(n, c, sizes, d);
  const MuSchedule schedule{{0.0, 3.0}, {}};
  NoncoreReport report;
  const auto one = block_factorize(core, rows, vocab, partition, schedule, 1, &report);
  const auto many = block_factorize(core, rows, vocab, partition, schedule, 4);
  CHECK(one.size() == n - c);
  CHECK(one.words() == many.words());
  CHECK(one.vectors() == many.vectors());
  REQUIRE(report.groups.size() == 2);
  CHECK(report.groups[0].range == IndexRange{20, 32});
  CHECK(report.groups[0].words == 12);
  CHECK(report.groups[1].mu == 3.0);
  CHECK(report.degenerate() == 0);
  CHECK(report.to_text().find("degenerate") != std::string::npos);

  // Exact rank-d rows at mu = 0 are recovered.
  for (std::size_t i = 0; i < 12; ++i) {
    const Eigen::VectorXd fit = core.vectors() * one.vector(i).transpose();
    CHECK((fit - G.row(c + i).leftCols(c).transpose()).cwiseAbs().maxCoeff() < 1e-6);
  }

  const auto all = combine(core, {one});
  CHECK(all.size() == n);
  CHECK(all.words() == vocab.words());

  const auto none = block_factorize(core, rows, vocab, partition_vocabulary(n, c, {}, d), MuSchedule{}, 1);
  CHECK(none.empty());

  const MuSchedule decreasing{{3.0, 1.0}, {}};
  CHECK_THROWS_AS(block_factorize(core, rows, vocab, partition, decreasing), DomainError);
}

TEST_CASE("per-word mu hook overrides the group value") {
  std::mt19937_64 rng(6);
  const std::size_t d = 3, c = 10, n = 16;
  const auto vocab = numbered_vocab(n);
  const Eigen::MatrixXd G = oracle::random_matrix(rng, n - c, c);
  const Eigen::MatrixXd W = Eigen::MatrixXd::Ones(n - c, c);
  const MatrixRowSource rows(G, W, c);
  std::vector<std::string> core_words(vocab.words().begin(), vocab.words().begin() + c);
  const EmbeddingSet core(core_words, oracle::random_matrix(rng, c, d));
  std::vector<std::uint32_t> words;
  for (std::size_t i = c; i < n; ++i) words.push_back(static_cast<std::uint32_t>(i));
  const auto base = solve_noncore_group(core, rows, vocab, words, 1.0);
  const auto hooked = solve_noncore_group(core, rows, vocab, words, 1.0, 2, nullptr,
                                          [](std::uint32_t, double mu) { return 100.0 * mu; });
  for (std::size_t i = 0; i < words.size(); ++i) CHECK(hooked.vector(i).norm() < base.vector(i).norm());
}

TEST_CASE("combine") {
  const EmbeddingSet core({"a", "b"}, RowMatrix::Ones(2, 2));
  const EmbeddingSet group({"c", "d", "e"}, RowMatrix::Zero(3, 2));
  CHECK(combine(core, {}).words() == core.words());
  const auto all = combine(core, {group});
  CHECK(all.words() == std::vector<std::string>{"a", "b", "c", "d", "e"});
  CHECK_THROWS_AS(combine(core, {EmbeddingSet({"a"}, RowMatrix::Zero(1, 2))}), DomainError);
  CHECK_THROWS_AS(combine(core, {EmbeddingSet({"z"}, RowMatrix::Zero(1, 3))}), DomainError);
}
