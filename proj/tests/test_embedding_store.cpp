#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "embedding_store.hpp"
#include "errors.hpp"
#include "oracles.hpp"

using namespace psdvec;

namespace {

std::string to_text(const EmbeddingSet& set) {
  std::ostringstream os;
  write_vec(set, os);
  return os.str();
}

EmbeddingSet from_text(const std::string& text) {
  std::istringstream in(text);
  return read_vec(in, "mem");
}

std::size_t error_line(const std::string& text) {
  try {
    from_text(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("write_vec format") {
  CHECK(to_text(EmbeddingSet({"w"}, RowMatrix::Zero(1, 2))) == "1 2\nw 0 0\n");
  CHECK(to_text(EmbeddingSet(3)) == "0 3\n");
  RowMatrix v(2, 3);
  v << -0.0, 1.0 / 3.0, 123456789.0, -2.5e-7, 1.0, -1.0;
  CHECK(to_text(EmbeddingSet({"a", "b"}, v)) == "2 3\na 0 0.333333 1.23457e+08\nb -2.5e-07 1 -1\n");
}

TEST_CASE("vec round trip within 6 significant digits") {
  std::mt19937_64 rng(1);
  std::vector<std::string> words;
  for (int i = 0; i < 50; ++i) words.push_back("word" + std::string(1, static_cast<char>('a' + i % 26)) +
                                               std::string(1, static_cast<char>('a' + i / 26)));
  const RowMatrix v = oracle::random_matrix(rng, 50, 10, -100.0, 100.0);
  const EmbeddingSet set(words, v);
  const auto back = from_text(to_text(set));
  CHECK(back.words() == set.words());
  CHECK(back.dim() == 10);
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index k = 0; k < v.cols(); ++k)
      CHECK(std::abs(back.vectors()(i, k) - v(i, k)) <= 5e-6 * std::abs(v(i, k)) + 1e-300);
  // A second pass is exact: the printed values are fixed points.
  CHECK(to_text(back) == to_text(set));
}

TEST_CASE("read_vec errors carry line numbers") {
  CHECK(error_line("3 2\na 1 2\nb 1 2\n") == 3);
  CHECK(error_line("2 2\na 1 2\nb 1\n") == 3);
  CHECK(error_line("2 2\na 1 2\na 1 2\n") == 3);
  CHECK(error_line("1 2\na nan 2\n") == 2);
  CHECK(error_line("1 2\na 1 2\nb 3 4\n") == 3);
  CHECK(error_line("x y\n") == 1);
  CHECK(error_line("") == 1);
  try {
    from_text("1 3\nfoo 1 2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("foo") != std::string::npos);
  }
}

TEST_CASE("save_vec writes atomically and load_vec reads it back") {
  const auto dir = std::filesystem::temp_directory_path() / "psdvec_store_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "x.vec";
  const EmbeddingSet set({"a", "b"}, RowMatrix::Identity(2, 2));
  save_vec(set, path);
  CHECK_FALSE(std::filesystem::exists(dir / "x.vec.tmp"));
  const auto back = load_vec(path);
  CHECK(back.words() == set.words());
  CHECK(back.vectors() == set.vectors());
  CHECK_THROWS_AS(load_vec(dir / "missing.vec"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("EmbeddingSet invariants") {
  CHECK_THROWS_AS(EmbeddingSet({"a", "a"}, RowMatrix::Zero(2, 2)), DomainError);
  CHECK_THROWS_AS(EmbeddingSet({"a"}, RowMatrix::Zero(2, 2)), DomainError);
  RowMatrix bad = RowMatrix::Zero(1, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(EmbeddingSet({"a"}, bad), DomainError);
  const EmbeddingSet ok({"x", "y"}, RowMatrix::Zero(2, 4));
  CHECK(*ok.find("y") == 1);
  CHECK_FALSE(ok.find("z").has_value());
}
