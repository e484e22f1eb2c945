#include "embedding_store.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "errors.hpp"
#include "io_util.hpp"

namespace psdvec {

EmbeddingSet::EmbeddingSet(std::vector<std::string> words, RowMatrix vectors)
    : words_(std::move(words)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(words_.size()) != vectors_.rows())
    throw DomainError("embedding set: " + std::to_string(words_.size()) + " words but " +
                      std::to_string(vectors_.rows()) + " vectors");
  if (!vectors_.allFinite()) throw DomainError("embedding set: non-finite vector entry");
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i].empty()) throw DomainError("embedding set: empty word");
    if (!index_.emplace(words_[i], i).second) throw DomainError("embedding set: duplicate word '" + words_[i] + "'");
  }
}

std::optional<std::size_t> EmbeddingSet::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void write_vec(const EmbeddingSet& set, std::ostream& out) {
  out << set.size() << ' ' << set.dim() << '\n';
  char buf[64];
  const auto& v = set.vectors();
  for (std::size_t i = 0; i < set.size(); ++i) {
    out << set.word(i);
    for (Eigen::Index k = 0; k < v.cols(); ++k) {
      double x = v(static_cast<Eigen::Index>(i), k);
      if (x == 0.0) x = 0.0;  // no "-0"
      std::snprintf(buf, sizeof buf, " %.6g", x);
      out << buf;
    }
    out << '\n';
  }
}

void save_vec(const EmbeddingSet& set, const std::filesystem::path& path) {
  AtomicFileWriter writer(path);
  write_vec(set, writer.stream());
  writer.commit();
}

namespace {

template <class T>
bool parse_number(std::string_view s, T& value) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

}  // namespace

EmbeddingSet read_vec(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing '<n> <d>' header");
  auto header = split_ws(line);
  std::size_t n = 0, d = 0;
  if (header.size() != 2 || !parse_number(header[0], n) || !parse_number(header[1], d))
    throw ParseError(source, 1, "expected '<n> <d>' header");

  std::vector<std::string> words;
  words.reserve(n);
  RowMatrix vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    std::string word(fields[0]);
    if (words.size() == n)
      throw ParseError(source, lineno, "more records than the header's " + std::to_string(n));
    if (fields.size() != d + 1)
      throw ParseError(source, lineno,
                       "record '" + word + "' has " + std::to_string(fields.size() - 1) + " values, expected " +
                           std::to_string(d));
    if (!seen.emplace(word, lineno).second) throw ParseError(source, lineno, "duplicate word '" + word + "'");
    const auto row = static_cast<Eigen::Index>(words.size());
    for (std::size_t k = 0; k < d; ++k) {
      double x = 0.0;
      if (!parse_number(fields[k + 1], x) || !std::isfinite(x))
        throw ParseError(source, lineno, "record '" + word + "': invalid value '" + std::string(fields[k + 1]) + "'");
      vectors(row, static_cast<Eigen::Index>(k)) = x;
    }
    words.push_back(std::move(word));
  }
  if (in.bad()) throw IoError("read error: " + source);
  if (words.size() != n)
    throw ParseError(source, lineno,
                     "header declares " + std::to_string(n) + " records, found " + std::to_string(words.size()));
  return EmbeddingSet(std::move(words), std::move(vectors));
}

EmbeddingSet load_vec(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_vec(in, path.string());
}

}  // namespace psdvec
