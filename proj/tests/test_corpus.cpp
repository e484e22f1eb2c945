#include <doctest.h>

#include <random>
#include <sstream>

#include "corpus.hpp"
#include "errors.hpp"
#include "oracles.hpp"

using namespace psdvec;

namespace {

std::vector<std::string> tokens_of(std::string_view text) { return tokenize(text).tokens; }

Vocabulary vocab_of(std::initializer_list<std::string> words) {
  std::vector<std::string> w(words);
  std::vector<std::uint64_t> c(w.size(), 1);
  return Vocabulary(w, c, w.size());
}

std::uint64_t table_count(const CooccurrenceTable& t, const Vocabulary& v, const std::string& a,
                          const std::string& b) {
  return t.count(*v.find(a), *v.find(b));
}

}  // namespace

TEST_CASE("tokenize lowercases and strips punctuation") {
  CHECK(tokens_of("The cat, the CAT!") == std::vector<std::string>{"the", "cat", "the", "cat"});
  CHECK(tokens_of("").empty());
  CHECK(tokens_of("a b2c d") == std::vector<std::string>{"a", "d"});
  CHECK(tokens_of("...  ,,") .empty());
}

TEST_CASE("tokenize records document breaks at blank lines") {
  const auto ts = tokenize("a b\n\nc d\n\n\ne\n\n");
  CHECK(ts.tokens == std::vector<std::string>{"a", "b", "c", "d", "e"});
  CHECK(ts.breaks == std::vector<std::size_t>{2, 4});

  TokenRules joined;
  joined.split_documents = false;
  CHECK(tokenize("a b\n\nc d", joined).breaks.empty());

  TokenRules sentinel;
  sentinel.document_sentinel = "</doc>";
  const auto s = tokenize("a b\n\nc\n  </doc> \nd", sentinel);
  CHECK(s.breaks == std::vector<std::size_t>{3});
}

TEST_CASE("count_unigrams") {
  SUBCASE("hand tally") {
    TokenStream ts{{"a", "b", "a", "c", "a", "b"}, {}};
    const auto v = count_unigrams(ts, 2);
    CHECK(v.words() == std::vector<std::string>{"a", "b"});
    CHECK(v.counts() == std::vector<std::uint64_t>{3, 2});
    CHECK(v.total_tokens() == 6);
  }
  SUBCASE("single word") {
    const auto v = count_unigrams(TokenStream{{"a"}, {}}, 1);
    CHECK(v.size() == 1);
    CHECK(v.count(0) == 1);
  }
  SUBCASE("everything filtered") {
    const auto v = count_unigrams(TokenStream{{"a", "b"}, {}}, 3);
    CHECK(v.empty());
    CHECK(v.total_tokens() == 2);
  }
  SUBCASE("ties are lexicographic") {
    const auto v = count_unigrams(TokenStream{{"d", "c", "b", "a", "b", "c"}, {}}, 1);
    CHECK(v.words() == std::vector<std::string>{"b", "c", "a", "d"});
  }
  SUBCASE("indices are dense and invert the word list") {
    const auto v = count_unigrams(TokenStream{{"x", "y", "z", "x", "q"}, {}}, 1);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(*v.find(v.word(i)) == i);
    CHECK_FALSE(v.find("nope").has_value());
  }
}

TEST_CASE("Vocabulary validates its invariants") {
  CHECK_THROWS_AS(Vocabulary({"a", "a"}, {2, 1}, 3), DomainError);
  CHECK_THROWS_AS(Vocabulary({"a", "b"}, {1, 2}, 3), DomainError);
  CHECK_THROWS_AS(Vocabulary({"a"}, {1}, 1, 2), DomainError);
}

TEST_CASE("count_bigrams hand examples") {
  SUBCASE("window 2") {
    const auto v = vocab_of({"a", "b", "c"});
    const auto t = count_bigrams(TokenStream{{"a", "b", "a", "c"}, {}}, v, 2);
    CHECK(table_count(t, v, "a", "b") == 1);
    CHECK(table_count(t, v, "a", "a") == 1);
    CHECK(table_count(t, v, "b", "a") == 1);
    CHECK(table_count(t, v, "b", "c") == 1);
    CHECK(table_count(t, v, "a", "c") == 1);
    CHECK(t.total_pairs() == 5);
    CHECK(t.nonzeros() == 5);
  }
  SUBCASE("single token") {
    const auto v = vocab_of({"a"});
    CHECK(count_bigrams(TokenStream{{"a"}, {}}, v, 4).total_pairs() == 0);
  }
  SUBCASE("window 1 is adjacency") {
    const auto v = vocab_of({"a", "b", "c"});
    const auto t = count_bigrams(TokenStream{{"a", "b", "c"}, {}}, v, 1);
    CHECK(t.total_pairs() == 2);
    CHECK(table_count(t, v, "a", "b") == 1);
    CHECK(table_count(t, v, "b", "c") == 1);
  }
  SUBCASE("window stops at document breaks") {
    const auto v = vocab_of({"a", "b"});
    const auto t = count_bigrams(TokenStream{{"a", "b", "a", "b"}, {2}}, v, 3);
    CHECK(t.total_pairs() == 2);
    CHECK(table_count(t, v, "a", "b") == 2);
  }
  SUBCASE("window must be positive") {
    CHECK_THROWS_AS(count_bigrams(TokenStream{{"a"}, {}}, vocab_of({"a"}), 0), DomainError);
  }
}

TEST_CASE("count_bigrams matches the brute-force double loop") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const int vocab_size = 1 + static_cast<int>(rng() % 12);
    const int window = 1 + static_cast<int>(rng() % 5);
    const std::size_t len = rng() % 3000;
    std::vector<std::string> names;
    for (int i = 0; i < vocab_size; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));

    TokenStream ts;
    std::vector<int> doc;
    int d = 0;
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0 && rng() % 50 == 0) {
        ts.breaks.push_back(t);
        ++d;
      }
      ts.tokens.push_back(names[rng() % vocab_size]);
      doc.push_back(d);
    }
    const auto vocab = count_unigrams(ts, 1);
    std::vector<std::uint32_t> ids;
    for (const auto& tok : ts.tokens) ids.push_back(*vocab.find(tok));
    const auto expected = oracle::brute_force_pairs(ids, doc, window);
    const auto table = count_bigrams(ts, vocab, window);

    std::uint64_t total = 0;
    std::size_t nonzeros = 0;
    for (std::size_t i = 0; i < vocab.size(); ++i)
      for (const auto& cc : table.row(i)) {
        auto it = expected.find({static_cast<std::uint32_t>(i), cc.context});
        REQUIRE(it != expected.end());
        CHECK(it->second == cc.count);
        total += cc.count;
        ++nonzeros;
      }
    CHECK(nonzeros == expected.size());
    CHECK(total == table.total_pairs());
  }
}

TEST_CASE("streaming and threaded counting agree with the in-memory path") {
  std::mt19937_64 rng(11);
  std::string text;
  for (int t = 0; t < 20000; ++t) {
    text += static_cast<char>('a' + rng() % 9);
    text += (rng() % 17 == 0) ? "\n\n" : (rng() % 9 == 0 ? "\n" : " ");
  }
  const auto ts = tokenize(text);
  const auto vocab = count_unigrams(ts, 1);
  const auto expected = count_bigrams(ts, vocab, 4);
  for (unsigned threads : {1u, 3u}) {
    std::istringstream in(text);
    CHECK(count_bigrams(in, TokenRules{}, vocab, 4, threads) == expected);
  }
  std::istringstream in(text);
  CHECK(count_unigrams(in, TokenRules{}, 1) == vocab);
}

TEST_CASE("counter merge is order independent") {
  BigramCounter a, b, ab, ba;
  a.add(0, 1);
  a.add(1, 1, 3);
  b.add(0, 1, 2);
  b.add(2, 0);
  ab.merge(a);
  ab.merge(b);
  ba.merge(b);
  ba.merge(a);
  CHECK(ab.finish(3, 2) == ba.finish(3, 2));
  CHECK(ab.finish(3, 2).count(0, 1) == 3);
}

TEST_CASE("unigram file round trip and errors") {
  const auto v = count_unigrams(TokenStream{{"a", "b", "a", "c", "a", "b"}, {}}, 1);
  std::stringstream ss;
  write_unigrams(v, ss);
  CHECK(ss.str() == "#total 6\na\t3\nb\t2\nc\t1\n");
  CHECK(read_unigrams(ss, "mem") == v);

  auto parse_line = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_unigrams(in, "mem");
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(parse_line("#total 3\na\t2\na\t1\n") == 3);
  CHECK(parse_line("#total 3\na\t-1\n") == 2);
  CHECK(parse_line("#total 3\na\tx\n") == 2);
  CHECK(parse_line("#total 3\na\t1\nb\t2\n") == 3);
  CHECK(parse_line("#total 3\na\n") == 2);
  CHECK(parse_line("total 3\n") == 1);
}

TEST_CASE("bigram file round trip and errors") {
  const auto v = vocab_of({"a", "b", "c"});
  const auto t = count_bigrams(TokenStream{{"a", "b", "a", "c"}, {}}, v, 2);
  std::stringstream ss;
  write_bigrams(t, v, ss);
  CHECK(read_bigrams(ss, v, "mem") == t);

  std::istringstream empty("#window 3\n");
  const auto e = read_bigrams(empty, v, "mem");
  CHECK(e.total_pairs() == 0);
  CHECK(e.window() == 3);

  std::istringstream negative("#window 2\na\t1\n\tb:-1\n");
  CHECK_THROWS_AS(read_bigrams(negative, v, "mem"), ParseError);
  std::istringstream unknown("#window 2\nzz\t1\n\tb:1\n");
  CHECK_THROWS_AS(read_bigrams(unknown, v, "mem"), ParseError);
  std::istringstream mismatch("#window 2\na\t5\n\tb:1\n");
  CHECK_THROWS_AS(read_bigrams(mismatch, v, "mem"), ParseError);
}

TEST_CASE("bigram file lists contexts by descending count") {
  const auto v = vocab_of({"a", "b", "c"});
  const auto t = count_bigrams(TokenStream{{"a", "c", "a", "c", "a", "b"}, {}}, v, 1);
  std::stringstream ss;
  write_bigrams(t, v, ss);
  CHECK(ss.str() == "#window 1\na\t3\n\tc:2\n\tb:1\nc\t2\n\ta:2\n");
}
