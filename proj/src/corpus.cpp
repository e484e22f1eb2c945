#include "corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "errors.hpp"
#include "io_util.hpp"

namespace psdvec {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::uint64_t pair_key(std::uint32_t lead, std::uint32_t context) {
  return (static_cast<std::uint64_t>(lead) << 32) | context;
}

std::optional<std::uint64_t> parse_count(std::string_view s) {
  std::uint64_t value = 0;
  if (s.empty()) return std::nullopt;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

// ---------------------------------------------------------------- tokens

TokenScanner::TokenScanner(std::istream& in, TokenRules rules) : in_(in), rules_(std::move(rules)) {
  for (unsigned char c : rules_.alphabet) allowed_.set(c);
}

// Punctuation at either end is stripped ("cat," -> "cat"); anything left
// must consist of allowed characters.
bool TokenScanner::accept(std::string& word) const {
  auto punct = [](char ch) { return std::ispunct(static_cast<unsigned char>(ch)) != 0; };
  std::size_t b = 0, e = word.size();
  while (b < e && punct(word[b])) ++b;
  while (e > b && punct(word[e - 1])) --e;
  if (b > 0 || e < word.size()) word = word.substr(b, e - b);
  for (char& ch : word) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') ch = static_cast<char>(c - 'A' + 'a');
    if (!allowed_.test(static_cast<unsigned char>(ch))) return false;
  }
  return !word.empty();
}

bool TokenScanner::fill_line() {
  if (!std::getline(in_, line_)) {
    if (in_.bad()) throw IoError("read error while tokenizing");
    return false;
  }
  pos_ = 0;
  if (rules_.split_documents && trim(line_) == trim(rules_.document_sentinel)) {
    pending_break_ = true;
    line_.clear();
  }
  return true;
}

bool TokenScanner::next(Item& item) {
  for (;;) {
    if (pending_break_) {
      pending_break_ = false;
      item = Item{{}, true};
      return true;
    }
    while (pos_ < line_.size() && is_space(line_[pos_])) ++pos_;
    if (pos_ >= line_.size()) {
      if (!fill_line()) return false;
      continue;
    }
    std::size_t end = pos_;
    while (end < line_.size() && !is_space(line_[end])) ++end;
    current_.assign(line_, pos_, end - pos_);
    pos_ = end;
    if (accept(current_)) {
      item = Item{current_, false};
      return true;
    }
  }
}

TokenStream tokenize(std::istream& in, const TokenRules& rules) {
  TokenStream out;
  TokenScanner scanner(in, rules);
  TokenScanner::Item item;
  while (scanner.next(item)) {
    if (item.is_break) {
      const std::size_t p = out.tokens.size();
      if (p > 0 && (out.breaks.empty() || out.breaks.back() != p)) out.breaks.push_back(p);
    } else {
      out.tokens.emplace_back(item.token);
    }
  }
  // A trailing break separates nothing.
  while (!out.breaks.empty() && out.breaks.back() >= out.tokens.size()) out.breaks.pop_back();
  return out;
}

TokenStream tokenize(std::string_view text, const TokenRules& rules) {
  std::istringstream in{std::string(text)};
  return tokenize(in, rules);
}

// ---------------------------------------------------------------- vocabulary

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts,
                       std::uint64_t total_tokens, std::uint64_t min_count)
    : words_(std::move(words)), counts_(std::move(counts)), total_tokens_(total_tokens) {
  if (words_.size() != counts_.size()) throw DomainError("vocabulary: words/counts length mismatch");
  if (words_.size() >= kDocumentBreak) throw DomainError("vocabulary: too many words");
  const std::uint64_t floor = std::max<std::uint64_t>(min_count, 1);
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i].empty()) throw DomainError("vocabulary: empty word at index " + std::to_string(i));
    if (counts_[i] < floor)
      throw DomainError("vocabulary: count of '" + words_[i] + "' below " + std::to_string(floor));
    if (i > 0 && counts_[i] > counts_[i - 1])
      throw DomainError("vocabulary: counts not sorted at '" + words_[i] + "'");
    if (!index_.emplace(words_[i], static_cast<std::uint32_t>(i)).second)
      throw DomainError("vocabulary: duplicate word '" + words_[i] + "'");
  }
}

std::optional<std::uint32_t> Vocabulary::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void UnigramCounter::add(std::string_view token) {
  ++counts_[std::string(token)];
  ++total_;
}

void UnigramCounter::merge(const UnigramCounter& other) {
  for (const auto& [word, n] : other.counts_) counts_[word] += n;
  total_ += other.total_;
}

Vocabulary UnigramCounter::finish(std::uint64_t min_count) const {
  if (min_count < 1) throw DomainError("min_count must be >= 1");
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (const auto& [word, n] : counts_)
    if (n >= min_count) kept.emplace_back(word, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  words.reserve(kept.size());
  counts.reserve(kept.size());
  for (auto& [word, n] : kept) {
    words.push_back(std::move(word));
    counts.push_back(n);
  }
  return Vocabulary(std::move(words), std::move(counts), total_, min_count);
}

Vocabulary count_unigrams(const TokenStream& tokens, std::uint64_t min_count) {
  UnigramCounter counter;
  for (const auto& t : tokens.tokens) counter.add(t);
  return counter.finish(min_count);
}

Vocabulary count_unigrams(std::istream& in, const TokenRules& rules, std::uint64_t min_count) {
  UnigramCounter counter;
  TokenScanner scanner(in, rules);
  TokenScanner::Item item;
  while (scanner.next(item))
    if (!item.is_break) counter.add(item.token);
  return counter.finish(min_count);
}

// ---------------------------------------------------------------- bigrams

CooccurrenceTable::CooccurrenceTable(std::size_t vocab_size, int window)
    : window_(window), rows_(vocab_size) {
  if (window < 1) throw DomainError("window must be >= 1");
}

CooccurrenceTable::CooccurrenceTable(int window, std::vector<std::vector<ContextCount>> rows)
    : window_(window), rows_(std::move(rows)) {
  if (window < 1) throw DomainError("window must be >= 1");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& row = rows_[i];
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k].count == 0) throw DomainError("cooccurrence table: zero count in row " + std::to_string(i));
      if (row[k].context >= rows_.size())
        throw DomainError("cooccurrence table: context index out of range in row " + std::to_string(i));
      if (k > 0 && row[k].context <= row[k - 1].context)
        throw DomainError("cooccurrence table: row " + std::to_string(i) + " not sorted by context");
      total_pairs_ += row[k].count;
    }
  }
}

std::uint64_t CooccurrenceTable::row_total(std::size_t i) const {
  std::uint64_t total = 0;
  for (const auto& cc : row(i)) total += cc.count;
  return total;
}

std::uint64_t CooccurrenceTable::count(std::size_t i, std::size_t j) const {
  const auto r = row(i);
  auto it = std::lower_bound(r.begin(), r.end(), j,
                             [](const ContextCount& cc, std::size_t ctx) { return cc.context < ctx; });
  return (it != r.end() && it->context == j) ? it->count : 0;
}

std::size_t CooccurrenceTable::nonzeros() const {
  std::size_t n = 0;
  for (const auto& r : rows_) n += r.size();
  return n;
}

void BigramCounter::add(std::uint32_t lead, std::uint32_t context, std::uint64_t n) {
  counts_[pair_key(lead, context)] += n;
}

void BigramCounter::merge(const BigramCounter& other) {
  for (const auto& [key, n] : other.counts_) counts_[key] += n;
}

CooccurrenceTable BigramCounter::finish(std::size_t vocab_size, int window) const {
  std::vector<std::vector<ContextCount>> rows(vocab_size);
  for (const auto& [key, n] : counts_) {
    const auto lead = static_cast<std::uint32_t>(key >> 32);
    const auto context = static_cast<std::uint32_t>(key & 0xFFFFFFFFu);
    if (lead >= vocab_size || context >= vocab_size) throw DomainError("bigram index outside vocabulary");
    rows[lead].push_back({context, n});
  }
  for (auto& row : rows)
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.context < b.context; });
  return CooccurrenceTable(window, std::move(rows));
}

void count_window_pairs(std::span<const std::uint32_t> ids, std::size_t begin, std::size_t end,
                        int window, BigramCounter& counter) {
  const std::size_t n = ids.size();
  for (std::size_t t = begin; t < end && t < n; ++t) {
    const std::uint32_t lead = ids[t];
    if (lead == kOutOfVocabulary || lead == kDocumentBreak) continue;
    for (std::size_t k = 1; k <= static_cast<std::size_t>(window) && t + k < n; ++k) {
      const std::uint32_t ctx = ids[t + k];
      if (ctx == kDocumentBreak) break;
      if (ctx != kOutOfVocabulary) counter.add(lead, ctx);
    }
  }
}

namespace {

void count_parallel(std::span<const std::uint32_t> ids, std::size_t limit, int window, unsigned threads,
                    BigramCounter& total) {
  if (threads <= 1 || limit < 4096) {
    count_window_pairs(ids, 0, limit, window, total);
    return;
  }
  std::vector<BigramCounter> shards(threads);
  std::vector<std::thread> workers;
  const std::size_t chunk = (limit + threads - 1) / threads;
  for (unsigned s = 0; s < threads; ++s) {
    const std::size_t b = std::min(limit, s * chunk);
    const std::size_t e = std::min(limit, b + chunk);
    workers.emplace_back([&, s, b, e] { count_window_pairs(ids, b, e, window, shards[s]); });
  }
  for (auto& w : workers) w.join();
  for (const auto& shard : shards) total.merge(shard);
}

}  // namespace

CooccurrenceTable count_bigrams(const TokenStream& tokens, const Vocabulary& vocab, int window) {
  if (window < 1) throw DomainError("window must be >= 1");
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.tokens.size() + tokens.breaks.size());
  std::size_t next_break = 0;
  for (std::size_t t = 0; t < tokens.tokens.size(); ++t) {
    if (next_break < tokens.breaks.size() && tokens.breaks[next_break] == t) {
      ids.push_back(kDocumentBreak);
      ++next_break;
    }
    ids.push_back(vocab.find(tokens.tokens[t]).value_or(kOutOfVocabulary));
  }
  BigramCounter counter;
  count_window_pairs(ids, 0, ids.size(), window, counter);
  return counter.finish(vocab.size(), window);
}

CooccurrenceTable count_bigrams(std::istream& in, const TokenRules& rules, const Vocabulary& vocab,
                                int window, unsigned threads) {
  if (window < 1) throw DomainError("window must be >= 1");
  constexpr std::size_t kBatch = std::size_t{1} << 20;
  BigramCounter counter;
  TokenScanner scanner(in, rules);
  TokenScanner::Item item;
  std::vector<std::uint32_t> ids;
  ids.reserve(kBatch + window + 1);
  std::string key;
  bool more = true;
  while (more) {
    while (ids.size() < kBatch + static_cast<std::size_t>(window)) {
      if (!scanner.next(item)) {
        more = false;
        break;
      }
      if (item.is_break) {
        ids.push_back(kDocumentBreak);
      } else {
        key.assign(item.token);
        ids.push_back(vocab.find(key).value_or(kOutOfVocabulary));
      }
    }
    // Keep the last `window` ids as lookahead for the next batch.
    const std::size_t limit = more ? ids.size() - window : ids.size();
    count_parallel(ids, limit, window, threads, counter);
    ids.erase(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(limit));
  }
  return counter.finish(vocab.size(), window);
}

// ---------------------------------------------------------------- files

void write_unigrams(const Vocabulary& vocab, std::ostream& out) {
  out << "#total " << vocab.total_tokens() << '\n';
  for (std::size_t i = 0; i < vocab.size(); ++i) out << vocab.word(i) << '\t' << vocab.count(i) << '\n';
}

void save_unigrams(const Vocabulary& vocab, const std::filesystem::path& path) {
  AtomicFileWriter writer(path);
  write_unigrams(vocab, writer.stream());
  writer.commit();
}

Vocabulary read_unigrams(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing '#total' header");
  std::string_view header = trim(line);
  if (header.substr(0, 7) != "#total ") throw ParseError(source, 1, "expected '#total <N>' header");
  auto total = parse_count(trim(header.substr(7)));
  if (!total) throw ParseError(source, 1, "non-numeric total");

  std::vector<std::string> words;
  std::vector<std::uint64_t> counts;
  std::unordered_map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError(source, lineno, "expected '<word>\\t<count>'");
    std::string word = line.substr(0, tab);
    auto n = parse_count(std::string_view(line).substr(tab + 1));
    if (!n) throw ParseError(source, lineno, "invalid count for '" + word + "'");
    if (*n == 0) throw ParseError(source, lineno, "zero count for '" + word + "'");
    if (!counts.empty() && *n > counts.back()) throw ParseError(source, lineno, "counts not in descending order");
    if (!seen.emplace(word, lineno).second) throw ParseError(source, lineno, "duplicate word '" + word + "'");
    words.push_back(std::move(word));
    counts.push_back(*n);
  }
  if (in.bad()) throw IoError("read error: " + source);
  return Vocabulary(std::move(words), std::move(counts), *total);
}

Vocabulary load_unigrams(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_unigrams(in, path.string());
}

void write_bigrams(const CooccurrenceTable& table, const Vocabulary& vocab, std::ostream& out) {
  if (table.vocab_size() != vocab.size()) throw DomainError("bigram table does not match vocabulary size");
  out << "#window " << table.window() << '\n';
  std::vector<ContextCount> row;
  for (std::size_t i = 0; i < table.vocab_size(); ++i) {
    const auto r = table.row(i);
    if (r.empty()) continue;
    row.assign(r.begin(), r.end());
    std::stable_sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.count > b.count; });
    out << vocab.word(i) << '\t' << table.row_total(i) << '\n';
    for (const auto& cc : row) out << '\t' << vocab.word(cc.context) << ':' << cc.count << '\n';
  }
}

void save_bigrams(const CooccurrenceTable& table, const Vocabulary& vocab, const std::filesystem::path& path) {
  AtomicFileWriter writer(path);
  write_bigrams(table, vocab, writer.stream());
  writer.commit();
}

CooccurrenceTable read_bigrams(std::istream& in, const Vocabulary& vocab, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing '#window' header");
  std::string_view header = trim(line);
  if (header.substr(0, 8) != "#window ") throw ParseError(source, 1, "expected '#window <w>' header");
  auto window = parse_count(trim(header.substr(8)));
  if (!window || *window < 1 || *window > 1'000'000) throw ParseError(source, 1, "invalid window");

  std::vector<std::vector<ContextCount>> rows(vocab.size());
  std::vector<bool> seen_row(vocab.size(), false);
  std::size_t lineno = 1;
  std::optional<std::uint32_t> lead;
  std::uint64_t declared = 0, summed = 0;
  std::size_t lead_line = 0;

  auto close_row = [&]() {
    if (!lead) return;
    if (summed != declared)
      throw ParseError(source, lead_line,
                       "row total " + std::to_string(declared) + " != sum of contexts " + std::to_string(summed));
    auto& row = rows[*lead];
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.context < b.context; });
    for (std::size_t k = 1; k < row.size(); ++k)
      if (row[k].context == row[k - 1].context)
        throw ParseError(source, lead_line, "duplicate context '" + vocab.word(row[k].context) + "' in row");
    lead.reset();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '\t') {
      if (!lead) throw ParseError(source, lineno, "context line before any leading word");
      std::string_view body = std::string_view(line).substr(1);
      const auto colon = body.rfind(':');
      if (colon == std::string_view::npos || colon == 0)
        throw ParseError(source, lineno, "expected '\\t<context>:<count>'");
      std::string ctx_word(body.substr(0, colon));
      auto n = parse_count(body.substr(colon + 1));
      if (!n) throw ParseError(source, lineno, "invalid count for context '" + ctx_word + "'");
      if (*n == 0) throw ParseError(source, lineno, "zero count for context '" + ctx_word + "'");
      auto ctx = vocab.find(ctx_word);
      if (!ctx) throw ParseError(source, lineno, "context word '" + ctx_word + "' not in vocabulary");
      rows[*lead].push_back({*ctx, *n});
      summed += *n;
    } else {
      close_row();
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0) throw ParseError(source, lineno, "expected '<word>\\t<row_total>'");
      std::string word = line.substr(0, tab);
      auto total = parse_count(std::string_view(line).substr(tab + 1));
      if (!total) throw ParseError(source, lineno, "invalid row total for '" + word + "'");
      auto idx = vocab.find(word);
      if (!idx) throw ParseError(source, lineno, "leading word '" + word + "' not in vocabulary");
      if (seen_row[*idx]) throw ParseError(source, lineno, "duplicate leading word '" + word + "'");
      seen_row[*idx] = true;
      lead = *idx;
      lead_line = lineno;
      declared = *total;
      summed = 0;
    }
  }
  close_row();
  if (in.bad()) throw IoError("read error: " + source);
  return CooccurrenceTable(static_cast<int>(*window), std::move(rows));
}

CooccurrenceTable load_bigrams(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto in = open_input(path);
  return read_bigrams(in, vocab, path.string());
}

}  // namespace psdvec
