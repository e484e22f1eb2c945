#pragma once

// Corpus statistics: token cleaning, unigram vocabulary and windowed
// bigram counts, plus their on-disk text formats.

#include <bitset>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace psdvec {

struct TokenRules {
  // Characters a token may contain after ASCII lowercasing.
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  // A line equal to this (ignoring surrounding whitespace) ends a document
  // and resets the co-occurrence window.
  std::string document_sentinel;
  bool split_documents = true;
};

struct TokenStream {
  std::vector<std::string> tokens;
  // Positions p such that tokens[p-1] and tokens[p] belong to different
  // documents. Sorted, unique, 0 < p < tokens.size().
  std::vector<std::size_t> breaks;
};

// Streams tokens out of a character stream one line at a time.
class TokenScanner {
 public:
  TokenScanner(std::istream& in, TokenRules rules);

  // Returns false at end of input. A document break is reported as an empty
  // token with is_break set.
  struct Item {
    std::string_view token;
    bool is_break = false;
  };
  bool next(Item& item);

 private:
  bool accept(std::string& word) const;
  bool fill_line();

  std::istream& in_;
  TokenRules rules_;
  std::bitset<256> allowed_;
  std::string line_;
  std::size_t pos_ = 0;
  std::string current_;
  bool pending_break_ = false;
};

TokenStream tokenize(std::istream& in, const TokenRules& rules = {});
TokenStream tokenize(std::string_view text, const TokenRules& rules = {});

class Vocabulary {
 public:
  Vocabulary() = default;
  // Validates: no duplicates, counts >= max(1, min_count) and non-increasing.
  Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts,
             std::uint64_t total_tokens, std::uint64_t min_count = 1);

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  std::uint64_t count(std::size_t i) const { return counts_.at(i); }
  const std::vector<std::string>& words() const { return words_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total_tokens() const { return total_tokens_; }
  std::optional<std::uint32_t> find(const std::string& word) const;

  bool operator==(const Vocabulary& other) const {
    return words_ == other.words_ && counts_ == other.counts_ &&
           total_tokens_ == other.total_tokens_;
  }

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::uint64_t total_tokens_ = 0;
};

// Order-independent unigram accumulator; shards merge with merge().
class UnigramCounter {
 public:
  void add(std::string_view token);
  void merge(const UnigramCounter& other);
  std::uint64_t total() const { return total_; }
  // Words ordered by descending count, ties lexicographic.
  Vocabulary finish(std::uint64_t min_count) const;

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

Vocabulary count_unigrams(const TokenStream& tokens, std::uint64_t min_count);
Vocabulary count_unigrams(std::istream& in, const TokenRules& rules, std::uint64_t min_count);

struct ContextCount {
  std::uint32_t context;
  std::uint64_t count;
  bool operator==(const ContextCount&) const = default;
};

// Row-grouped ordered pair counts. Row i holds the contexts that followed
// word i within the window, sorted by context index.
class CooccurrenceTable {
 public:
  CooccurrenceTable() = default;
  CooccurrenceTable(std::size_t vocab_size, int window);
  CooccurrenceTable(int window, std::vector<std::vector<ContextCount>> rows);

  int window() const { return window_; }
  std::size_t vocab_size() const { return rows_.size(); }
  std::span<const ContextCount> row(std::size_t i) const { return rows_.at(i); }
  std::uint64_t row_total(std::size_t i) const;
  std::uint64_t count(std::size_t i, std::size_t j) const;
  std::uint64_t total_pairs() const { return total_pairs_; }
  std::size_t nonzeros() const;

  bool operator==(const CooccurrenceTable& other) const {
    return window_ == other.window_ && rows_ == other.rows_;
  }

 private:
  int window_ = 1;
  std::vector<std::vector<ContextCount>> rows_;
  std::uint64_t total_pairs_ = 0;
};

// Order-independent pair accumulator over vocabulary indices.
class BigramCounter {
 public:
  void add(std::uint32_t lead, std::uint32_t context, std::uint64_t n = 1);
  void merge(const BigramCounter& other);
  std::size_t distinct() const { return counts_.size(); }
  CooccurrenceTable finish(std::size_t vocab_size, int window) const;

 private:
  std::unordered_map<std::uint64_t, std::uint64_t> counts_;
};

// Token ids: vocabulary index, or one of these markers.
inline constexpr std::uint32_t kOutOfVocabulary = 0xFFFFFFFFu;
inline constexpr std::uint32_t kDocumentBreak = 0xFFFFFFFEu;

// Counts pairs (ids[t], ids[t+k]) for t in [begin, end), 1 <= k <= window.
// Lookahead may run past `end` but stops at ids.size() and at breaks.
void count_window_pairs(std::span<const std::uint32_t> ids, std::size_t begin, std::size_t end,
                        int window, BigramCounter& counter);

CooccurrenceTable count_bigrams(const TokenStream& tokens, const Vocabulary& vocab, int window);
// Streaming variant; memory is bounded by the number of distinct pairs.
CooccurrenceTable count_bigrams(std::istream& in, const TokenRules& rules, const Vocabulary& vocab,
                                int window, unsigned threads = 1);

void save_unigrams(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_unigrams(const std::filesystem::path& path);
void write_unigrams(const Vocabulary& vocab, std::ostream& out);
Vocabulary read_unigrams(std::istream& in, const std::string& source);

void save_bigrams(const CooccurrenceTable& table, const Vocabulary& vocab,
                  const std::filesystem::path& path);
CooccurrenceTable load_bigrams(const std::filesystem::path& path, const Vocabulary& vocab);
void write_bigrams(const CooccurrenceTable& table, const Vocabulary& vocab, std::ostream& out);
CooccurrenceTable read_bigrams(std::istream& in, const Vocabulary& vocab, const std::string& source);

}  // namespace psdvec
