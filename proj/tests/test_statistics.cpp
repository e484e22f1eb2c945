#include <doctest.h>

#include <cmath>
#include <random>

#include "corpus.hpp"
#include "errors.hpp"
#include "oracles.hpp"
#include "statistics.hpp"

using namespace psdvec;

namespace {

struct Fixture {
  Vocabulary vocab;
  CooccurrenceTable table;
  UnigramDistribution uni;
};

Fixture fixture_from(const std::vector<std::string>& tokens, int window) {
  TokenStream ts{tokens, {}};
  auto vocab = count_unigrams(ts, 1);
  auto table = count_bigrams(ts, vocab, window);
  auto uni = unigram_distribution(vocab);
  return {std::move(vocab), std::move(table), std::move(uni)};
}

Fixture random_fixture(std::uint64_t seed, int words, int length, int window) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> tokens;
  // Skewed draw so the vocabulary has a spread of frequencies.
  std::geometric_distribution<int> geo(0.25);
  for (int t = 0; t < length; ++t) {
    int k = std::min(geo(rng), words - 1);
    std::string name = "w";
    do {
      name += static_cast<char>('a' + k % 26);
      k /= 26;
    } while (k);
    tokens.push_back(name);
  }
  return fixture_from(tokens, window);
}

}  // namespace

TEST_CASE("unigram_distribution") {
  CHECK(unigram_distribution(Vocabulary({"a", "b"}, {3, 1}, 4)).probs() == std::vector<double>{0.75, 0.25});
  CHECK(unigram_distribution(Vocabulary({"a"}, {5}, 5)).probs() == std::vector<double>{1.0});
  const auto u = unigram_distribution(Vocabulary({"a", "b", "c", "d"}, {2, 2, 2, 2}, 8));
  for (double p : u.probs()) CHECK(p == 0.25);
  CHECK_THROWS_AS(unigram_distribution(Vocabulary()), DomainError);
}

TEST_CASE("smoothed_bigram_prob") {
  const auto f = fixture_from({"a", "b", "a", "c"}, 2);
  const std::size_t a = *f.vocab.find("a"), b = *f.vocab.find("b"), c = *f.vocab.find("c");
  CHECK(smoothed_bigram_prob(a, b, f.table, f.uni, SmoothingConfig{0.0}) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(smoothed_bigram_prob(b, b, f.table, f.uni, SmoothingConfig{0.0}) == 0.0);
  CHECK(smoothed_bigram_prob(a, c, f.table, f.uni, SmoothingConfig{1.0}) == f.uni[a] * f.uni[c]);
  CHECK_THROWS_AS(smoothed_bigram_prob(a, b, CooccurrenceTable(3, 2), f.uni, SmoothingConfig{}), DomainError);
  CHECK_THROWS_AS(smoothed_bigram_prob(a, b, f.table, f.uni, SmoothingConfig{1.5}), DomainError);
}

TEST_CASE("weight_transform") {
  CHECK(weight_transform(0.0, WeightConfig{}) == 0.0);
  CHECK(weight_transform(0.2, WeightConfig{1.0, std::nullopt, true}) == 0.2);
  CHECK(weight_transform(0.25, WeightConfig{0.5, std::nullopt, true}) == 0.5);
  CHECK(weight_transform(0.9, WeightConfig{1.0, 0.5, true}) == 0.5);

  SUBCASE("monotone for every config") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
      WeightConfig cfg{0.1 + 2.0 * u(rng), u(rng) < 0.5 ? std::optional<double>(u(rng) + 1e-3) : std::nullopt, true};
      double p1 = u(rng), p2 = u(rng);
      if (p1 > p2) std::swap(p1, p2);
      CHECK(weight_transform(p1, cfg) <= weight_transform(p2, cfg));
    }
  }
}

TEST_CASE("pmi_block masks zero mass and normalizes weights") {
  const auto f = fixture_from({"a", "b", "a", "c"}, 2);
  const IndexRange all{0, f.vocab.size()};
  const auto [g, w] = pmi_block(all, all, f.table, f.uni, SmoothingConfig{0.0}, WeightConfig{});
  for (Eigen::Index i = 0; i < g.values.rows(); ++i)
    for (Eigen::Index j = 0; j < g.values.cols(); ++j) {
      const bool seen = f.table.count(i, j) + f.table.count(j, i) > 0;
      if (!seen) {
        CHECK(g.values(i, j) == 0.0);
        CHECK(w.values(i, j) == 0.0);
      } else {
        CHECK(w.values(i, j) > 0.0);
      }
    }
  CHECK(w.values.maxCoeff() == 1.0);
  CHECK(w.values.minCoeff() >= 0.0);
}

TEST_CASE("pmi_block with lambda = 1 is identically zero") {
  const auto f = random_fixture(5, 12, 4000, 3);
  const IndexRange all{0, f.vocab.size()};
  const auto [g, w] = pmi_block(all, all, f.table, f.uni, SmoothingConfig{1.0}, WeightConfig{});
  CHECK(g.values.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(w.values.minCoeff() > 0.0);
}

TEST_CASE("pmi_block of a two-word alternating corpus matches a scalar computation") {
  std::vector<std::string> tokens;
  for (int t = 0; t < 10000; ++t) tokens.push_back(t % 2 ? "b" : "a");
  const auto f = fixture_from(tokens, 1);
  const std::size_t a = *f.vocab.find("a"), b = *f.vocab.find("b");
  const auto [g, w] = pmi_block({0, 2}, {0, 2}, f.table, f.uni, SmoothingConfig{0.0}, WeightConfig{});
  // 9999 adjacent pairs, all a-b or b-a: symmetrized P(a,b) = 9999 / (2 * 9999).
  const double p_ab = 0.5;
  CHECK(std::abs(g.values(a, b) - std::log(p_ab / (0.5 * 0.5))) <= 1e-12);
  CHECK(g.values(a, a) == 0.0);
  CHECK(w.values(a, a) == 0.0);
}

TEST_CASE("counts proportional to P(i)P(j) give zero PMI at lambda = 0") {
  const Vocabulary vocab({"a", "b", "c"}, {2, 1, 1}, 4);
  const auto uni = unigram_distribution(vocab);
  // c_ij = 16 P_i P_j, symmetric, total 16.
  std::vector<std::vector<ContextCount>> rows = {
      {{0, 4}, {1, 2}, {2, 2}}, {{0, 2}, {1, 1}, {2, 1}}, {{0, 2}, {1, 1}, {2, 1}}};
  const CooccurrenceTable table(1, rows);
  const auto [g, w] = pmi_block({0, 3}, {0, 3}, table, uni, SmoothingConfig{0.0}, WeightConfig{});
  CHECK(g.values.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("pmi_block symmetry: (A,B) is the transpose of (B,A)") {
  const auto f = random_fixture(9, 15, 5000, 4);
  const std::size_t n = f.vocab.size();
  const IndexRange A{0, n / 2}, B{n / 3, n};
  for (double lambda : {0.0, 0.1, 0.7}) {
    const auto [gab, wab] = pmi_block(A, B, f.table, f.uni, SmoothingConfig{lambda}, WeightConfig{}, 1.0);
    const auto [gba, wba] = pmi_block(B, A, f.table, f.uni, SmoothingConfig{lambda}, WeightConfig{}, 1.0);
    CHECK((gab.values - gba.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((wab.values - wba.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("core_weight_scale equals the dense core-block maximum") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto f = random_fixture(seed, 20, 3000, 2);
    const std::size_t c = std::min<std::size_t>(8, f.vocab.size());
    std::vector<std::uint32_t> core(c);
    for (std::size_t k = 0; k < c; ++k) core[k] = static_cast<std::uint32_t>(k);
    for (double lambda : {0.0, 0.1, 1.0}) {
      WeightConfig raw{0.5, std::nullopt, false};
      const auto [g, w] = pmi_block({0, c}, {0, c}, f.table, f.uni, SmoothingConfig{lambda}, raw);
      CHECK(core_weight_scale(core, f.table, f.uni, SmoothingConfig{lambda}, raw) ==
            doctest::Approx(w.values.maxCoeff()).epsilon(1e-14));
    }
  }
}

TEST_CASE("CoreRowBuilder agrees with pmi_block on observed pairs and masks the rest") {
  const auto f = random_fixture(21, 25, 6000, 3);
  const std::size_t n = f.vocab.size();
  const std::size_t c = n / 2;
  std::vector<std::uint32_t> core(c);
  for (std::size_t k = 0; k < c; ++k) core[k] = static_cast<std::uint32_t>(k);
  const SmoothingConfig sm{0.1};
  const WeightConfig wc{};
  const double scale = core_weight_scale(core, f.table, f.uni, sm, wc);
  const CoreRowBuilder builder(f.table, f.uni, sm, wc, core, scale);
  const auto [g, w] = pmi_block({c, n}, {0, c}, f.table, f.uni, sm, wc, scale);
  std::vector<double> gr(c), wr(c);
  for (std::size_t i = c; i < n; ++i) {
    builder.build(static_cast<std::uint32_t>(i), gr, wr);
    for (std::size_t k = 0; k < c; ++k) {
      const bool seen = f.table.count(i, k) + f.table.count(k, i) > 0;
      if (seen) {
        CHECK(gr[k] == doctest::Approx(g.values(i - c, k)).epsilon(1e-13));
        CHECK(wr[k] == doctest::Approx(w.values(i - c, k)).epsilon(1e-13));
      } else {
        CHECK(gr[k] == 0.0);
        CHECK(wr[k] == 0.0);
      }
    }
  }
}
