#include "psdvec/psdvec.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <unordered_set>

#include "core_solver.hpp"
#include "corpus.hpp"
#include "embedding_store.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "incremental_solver.hpp"
#include "io_util.hpp"
#include "statistics.hpp"

#ifndef PSDVEC_VERSION_STRING
#define PSDVEC_VERSION_STRING "0.0.0"
#endif

struct psdvec_vocab {
  std::shared_ptr<const psdvec::Vocabulary> vocab;
};

struct psdvec_bigrams {
  std::shared_ptr<const psdvec::Vocabulary> vocab;
  psdvec::CooccurrenceTable table;
};

struct psdvec_embeddings {
  psdvec::EmbeddingSet set;
};

namespace {

thread_local std::string g_last_error;

psdvec_status status_of(psdvec::ErrorKind kind) {
  switch (kind) {
    case psdvec::ErrorKind::Io:
      return PSDVEC_E_IO;
    case psdvec::ErrorKind::Parse:
      return PSDVEC_E_PARSE;
    case psdvec::ErrorKind::Domain:
      return PSDVEC_E_DOMAIN;
    case psdvec::ErrorKind::Precondition:
      return PSDVEC_E_PRECONDITION;
    case psdvec::ErrorKind::Numerical:
      return PSDVEC_E_NUMERICAL;
  }
  return PSDVEC_E_INTERNAL;
}

struct InvalidArgument {
  std::string what;
};

template <class F>
psdvec_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PSDVEC_OK;
  } catch (const InvalidArgument& e) {
    g_last_error = e.what;
    return PSDVEC_E_INVALID_ARGUMENT;
  } catch (const psdvec::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PSDVEC_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PSDVEC_E_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument{what};
}

psdvec::TokenRules to_rules(const psdvec_token_rules* rules) {
  psdvec::TokenRules r;
  if (!rules) return r;
  if (rules->alphabet) r.alphabet = rules->alphabet;
  if (rules->document_sentinel) r.document_sentinel = rules->document_sentinel;
  r.split_documents = rules->split_documents != 0;
  return r;
}

psdvec::SmoothingConfig to_smoothing(const psdvec_stats_config* s) {
  psdvec::SmoothingConfig cfg;
  if (s) cfg.lambda = s->lambda;
  cfg.validate();
  return cfg;
}

psdvec::WeightConfig to_weight(const psdvec_stats_config* s) {
  psdvec::WeightConfig cfg;
  if (s) {
    cfg.alpha = s->alpha;
    if (s->cap > 0.0) cfg.cap = s->cap;
    cfg.normalize = s->normalize != 0;
  }
  cfg.validate();
  return cfg;
}

// Counts rows without any observed core co-occurrence.
class CountingRowSource final : public psdvec::RowSource {
 public:
  explicit CountingRowSource(const psdvec::CoreRowBuilder& builder) : builder_(builder) {}
  std::size_t core_size() const override { return builder_.core_size(); }
  void build(std::uint32_t word, std::span<double> g, std::span<double> w) const override {
    if (builder_.build(word, g, w) == 0) empty_.fetch_add(1, std::memory_order_relaxed);
  }
  std::size_t empty_rows() const { return empty_.load(); }

 private:
  const psdvec::CoreRowBuilder& builder_;
  mutable std::atomic<std::size_t> empty_{0};
};

void copy_string(char* dst, std::size_t cap, const std::string& src) {
  const std::size_t n = std::min(cap - 1, src.size());
  std::memcpy(dst, src.data(), n);
  dst[n] = '\0';
}

void fill_report(psdvec_eval_report* out, const psdvec::EvalReport& r) {
  copy_string(out->testset, sizeof out->testset, r.testset);
  copy_string(out->metric, sizeof out->metric, r.metric);
  out->value = r.value;
  out->total = r.total;
  out->covered = r.covered;
  out->coverage = r.coverage();
}

}  // namespace

extern "C" {

const char* psdvec_version(void) { return PSDVEC_VERSION_STRING; }

const char* psdvec_last_error(void) { return g_last_error.c_str(); }

const char* psdvec_status_name(psdvec_status status) {
  switch (status) {
    case PSDVEC_OK:
      return "ok";
    case PSDVEC_E_INVALID_ARGUMENT:
      return "invalid argument";
    case PSDVEC_E_IO:
      return "i/o error";
    case PSDVEC_E_PARSE:
      return "parse error";
    case PSDVEC_E_DOMAIN:
      return "domain error";
    case PSDVEC_E_PRECONDITION:
      return "precondition violated";
    case PSDVEC_E_NUMERICAL:
      return "numerical failure";
    case PSDVEC_E_INTERNAL:
      return "internal error";
  }
  return "unknown";
}

void psdvec_token_rules_default(psdvec_token_rules* rules) {
  if (!rules) return;
  rules->alphabet = nullptr;
  rules->document_sentinel = nullptr;
  rules->split_documents = 1;
}

psdvec_status psdvec_vocab_count(const char* corpus_path, uint64_t min_count, const psdvec_token_rules* rules,
                                 psdvec_vocab** out) {
  return guarded([&] {
    require(corpus_path && out, "corpus_path and out must not be null");
    require(min_count >= 1, "min_count must be >= 1");
    auto in = psdvec::open_input(corpus_path);
    auto vocab = psdvec::count_unigrams(in, to_rules(rules), min_count);
    *out = new psdvec_vocab{std::make_shared<const psdvec::Vocabulary>(std::move(vocab))};
  });
}

psdvec_status psdvec_vocab_load(const char* path, psdvec_vocab** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new psdvec_vocab{std::make_shared<const psdvec::Vocabulary>(psdvec::load_unigrams(path))};
  });
}

psdvec_status psdvec_vocab_save(const psdvec_vocab* vocab, const char* path) {
  return guarded([&] {
    require(vocab && path, "vocab and path must not be null");
    psdvec::save_unigrams(*vocab->vocab, path);
  });
}

void psdvec_vocab_free(psdvec_vocab* vocab) { delete vocab; }

size_t psdvec_vocab_size(const psdvec_vocab* vocab) { return vocab ? vocab->vocab->size() : 0; }

uint64_t psdvec_vocab_total_tokens(const psdvec_vocab* vocab) { return vocab ? vocab->vocab->total_tokens() : 0; }

const char* psdvec_vocab_word(const psdvec_vocab* vocab, size_t i) {
  if (!vocab || i >= vocab->vocab->size()) return nullptr;
  return vocab->vocab->word(i).c_str();
}

uint64_t psdvec_vocab_count_of(const psdvec_vocab* vocab, size_t i) {
  if (!vocab || i >= vocab->vocab->size()) return 0;
  return vocab->vocab->count(i);
}

int64_t psdvec_vocab_find(const psdvec_vocab* vocab, const char* word) {
  if (!vocab || !word) return -1;
  auto i = vocab->vocab->find(word);
  return i ? static_cast<int64_t>(*i) : -1;
}

psdvec_status psdvec_bigrams_count(const char* corpus_path, const psdvec_vocab* vocab, int window,
                                   const psdvec_token_rules* rules, unsigned threads, psdvec_bigrams** out) {
  return guarded([&] {
    require(corpus_path && vocab && out, "corpus_path, vocab and out must not be null");
    require(window >= 1, "window must be >= 1");
    if (vocab->vocab->empty()) throw psdvec::DomainError("cannot count bigrams over an empty vocabulary");
    auto in = psdvec::open_input(corpus_path);
    auto table = psdvec::count_bigrams(in, to_rules(rules), *vocab->vocab, window, std::max(1u, threads));
    *out = new psdvec_bigrams{vocab->vocab, std::move(table)};
  });
}

psdvec_status psdvec_bigrams_load(const char* path, const psdvec_vocab* vocab, psdvec_bigrams** out) {
  return guarded([&] {
    require(path && vocab && out, "path, vocab and out must not be null");
    auto table = psdvec::load_bigrams(path, *vocab->vocab);
    *out = new psdvec_bigrams{vocab->vocab, std::move(table)};
  });
}

psdvec_status psdvec_bigrams_save(const psdvec_bigrams* bigrams, const char* path) {
  return guarded([&] {
    require(bigrams && path, "bigrams and path must not be null");
    psdvec::save_bigrams(bigrams->table, *bigrams->vocab, path);
  });
}

void psdvec_bigrams_free(psdvec_bigrams* bigrams) { delete bigrams; }

int psdvec_bigrams_window(const psdvec_bigrams* bigrams) { return bigrams ? bigrams->table.window() : 0; }

uint64_t psdvec_bigrams_total_pairs(const psdvec_bigrams* bigrams) {
  return bigrams ? bigrams->table.total_pairs() : 0;
}

uint64_t psdvec_bigrams_count_of(const psdvec_bigrams* bigrams, size_t lead, size_t context) {
  if (!bigrams || lead >= bigrams->table.vocab_size() || context >= bigrams->table.vocab_size()) return 0;
  return bigrams->table.count(lead, context);
}

size_t psdvec_bigrams_nonzeros(const psdvec_bigrams* bigrams) { return bigrams ? bigrams->table.nonzeros() : 0; }

void psdvec_stats_config_default(psdvec_stats_config* cfg) {
  if (!cfg) return;
  cfg->lambda = psdvec::SmoothingConfig{}.lambda;
  cfg->alpha = psdvec::WeightConfig{}.alpha;
  cfg->cap = 0.0;
  cfg->normalize = 1;
}

void psdvec_core_config_default(psdvec_core_config* cfg) {
  if (!cfg) return;
  psdvec::CoreSolveConfig d;
  cfg->core_size = 0;
  cfg->dim = d.dim;
  cfg->max_iters = d.max_iters;
  cfg->tol = d.tol;
}

psdvec_status psdvec_factorize_core(const psdvec_bigrams* bigrams, const psdvec_stats_config* stats,
                                    const psdvec_core_config* core, psdvec_iteration_fn on_iteration, void* user,
                                    psdvec_embeddings** out, psdvec_core_result* result) {
  return guarded([&] {
    require(bigrams && core && out, "bigrams, core and out must not be null");
    const auto& vocab = *bigrams->vocab;
    psdvec::CoreSolveConfig cfg{core->dim, core->max_iters, core->tol};
    cfg.validate(core->core_size);
    if (core->core_size > vocab.size())
      throw psdvec::PreconditionError("core size " + std::to_string(core->core_size) + " exceeds vocabulary size " +
                                      std::to_string(vocab.size()));
    const auto smoothing = to_smoothing(stats);
    const auto weight = to_weight(stats);
    const auto uni = psdvec::unigram_distribution(vocab);
    const psdvec::IndexRange range{0, core->core_size};
    auto [G, W] = psdvec::pmi_block(range, range, bigrams->table, uni, smoothing, weight);
    std::vector<std::string> words(vocab.words().begin(),
                                   vocab.words().begin() + static_cast<std::ptrdiff_t>(core->core_size));
    psdvec::SolveDiagnostics diag;
    psdvec::IterationCallback cb;
    if (on_iteration) cb = [&](int t, double r) { on_iteration(user, t, r); };
    auto set = psdvec::em_factorize(G, W, words, cfg, &diag, cb);
    if (result) {
      result->iterations = diag.iterations;
      result->converged = diag.converged ? 1 : 0;
      result->initial_residual = diag.residuals.front();
      result->final_residual = diag.residuals.back();
    }
    *out = new psdvec_embeddings{std::move(set)};
  });
}

psdvec_status psdvec_factorize_noncore(const psdvec_bigrams* bigrams, const psdvec_embeddings* base,
                                       size_t core_size, size_t count, double mu, const psdvec_stats_config* stats,
                                       unsigned threads, psdvec_embeddings** out, psdvec_noncore_result* result) {
  return guarded([&] {
    require(bigrams && base && out, "bigrams, base and out must not be null");
    require(mu >= 0.0 && std::isfinite(mu), "mu must be finite and >= 0");
    const auto start = std::chrono::steady_clock::now();
    const auto& vocab = *bigrams->vocab;
    const auto& set = base->set;
    if (core_size == 0) core_size = set.size();
    if (core_size > set.size())
      throw psdvec::PreconditionError("core size " + std::to_string(core_size) + " exceeds the " +
                                      std::to_string(set.size()) + " words of the base embeddings");

    std::vector<std::uint32_t> core_idx;
    std::vector<std::string> core_words;
    std::vector<Eigen::Index> core_rows;
    for (std::size_t k = 0; k < core_size; ++k) {
      if (auto i = vocab.find(set.word(k))) {
        core_idx.push_back(*i);
        core_words.push_back(set.word(k));
        core_rows.push_back(static_cast<Eigen::Index>(k));
      }
    }
    if (core_idx.empty()) throw psdvec::DomainError("no core word of the base embeddings is in the vocabulary");
    psdvec::RowMatrix core_vectors(static_cast<Eigen::Index>(core_rows.size()), static_cast<Eigen::Index>(set.dim()));
    for (std::size_t k = 0; k < core_rows.size(); ++k)
      core_vectors.row(static_cast<Eigen::Index>(k)) = set.vectors().row(core_rows[k]);
    psdvec::EmbeddingSet core(std::move(core_words), std::move(core_vectors));

    const auto smoothing = to_smoothing(stats);
    const auto weight = to_weight(stats);
    const auto uni = psdvec::unigram_distribution(vocab);
    const double scale =
        weight.normalize ? psdvec::core_weight_scale(core_idx, bigrams->table, uni, smoothing, weight) : 1.0;
    psdvec::CoreRowBuilder builder(bigrams->table, uni, smoothing, weight, core_idx, scale);
    CountingRowSource rows(builder);

    std::vector<std::uint32_t> fresh;
    for (std::size_t i = 0; i < vocab.size() && fresh.size() < count; ++i)
      if (!set.find(vocab.word(i))) fresh.push_back(static_cast<std::uint32_t>(i));

    psdvec::GroupReport report;
    auto added = psdvec::solve_noncore_group(core, rows, vocab, fresh, mu, std::max(1u, threads), &report);
    auto combined = psdvec::combine(set, {added});
    if (result) {
      result->words_added = added.size();
      result->degenerate = report.degenerate;
      result->core_used = core_idx.size();
      result->core_missing = core_size - core_idx.size();
      result->empty_rows = rows.empty_rows();
      result->weight_scale = scale;
      result->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    *out = new psdvec_embeddings{std::move(combined)};
  });
}

psdvec_status psdvec_embeddings_load(const char* path, psdvec_embeddings** out) {
  return guarded([&] {
    require(path && out, "path and out must not be null");
    *out = new psdvec_embeddings{psdvec::load_vec(path)};
  });
}

psdvec_status psdvec_embeddings_save(const psdvec_embeddings* set, const char* path) {
  return guarded([&] {
    require(set && path, "set and path must not be null");
    psdvec::save_vec(set->set, path);
  });
}

void psdvec_embeddings_free(psdvec_embeddings* set) { delete set; }

size_t psdvec_embeddings_size(const psdvec_embeddings* set) { return set ? set->set.size() : 0; }

size_t psdvec_embeddings_dim(const psdvec_embeddings* set) { return set ? set->set.dim() : 0; }

const char* psdvec_embeddings_word(const psdvec_embeddings* set, size_t i) {
  if (!set || i >= set->set.size()) return nullptr;
  return set->set.word(i).c_str();
}

int64_t psdvec_embeddings_find(const psdvec_embeddings* set, const char* word) {
  if (!set || !word) return -1;
  auto i = set->set.find(word);
  return i ? static_cast<int64_t>(*i) : -1;
}

psdvec_status psdvec_embeddings_vector(const psdvec_embeddings* set, size_t i, double* out, size_t len) {
  return guarded([&] {
    require(set && out, "set and out must not be null");
    require(i < set->set.size(), "word index out of range");
    require(len >= set->set.dim(), "output buffer shorter than the dimension");
    const auto v = set->set.vector(i);
    for (Eigen::Index k = 0; k < v.size(); ++k) out[k] = v(k);
  });
}

psdvec_testset_kind psdvec_testset_kind_of(const char* path) {
  if (!path) return PSDVEC_TESTSET_UNKNOWN;
  auto kind = psdvec::testset_kind(path);
  if (!kind) return PSDVEC_TESTSET_UNKNOWN;
  switch (*kind) {
    case psdvec::TestsetKind::Similarity:
      return PSDVEC_TESTSET_SIMILARITY;
    case psdvec::TestsetKind::Analogy:
      return PSDVEC_TESTSET_ANALOGY;
    case psdvec::TestsetKind::Choice:
      return PSDVEC_TESTSET_CHOICE;
  }
  return PSDVEC_TESTSET_UNKNOWN;
}

psdvec_status psdvec_evaluate_file(const psdvec_embeddings* set, const char* path, psdvec_eval_report* report) {
  return guarded([&] {
    require(set && path && report, "set, path and report must not be null");
    std::memset(report, 0, sizeof *report);
    try {
      fill_report(report, psdvec::evaluate_file(set->set, path));
    } catch (const psdvec::EvaluationError& e) {
      fill_report(report, e.report());
      throw;
    }
  });
}

size_t psdvec_format_reports(const psdvec_eval_report* reports, size_t n, char* buf, size_t len) {
  std::vector<psdvec::EvalReport> rs;
  for (size_t i = 0; reports && i < n; ++i)
    rs.push_back({reports[i].testset, reports[i].metric, reports[i].value, reports[i].total, reports[i].covered});
  const std::string text = psdvec::format_reports(rs);
  if (buf && len > 0) copy_string(buf, len, text);
  return text.size();
}

}  // extern "C"
