// psdvec command line: count -> factorize core -> factorize noncore -> evaluate.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <psdvec/psdvec.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct CliFailure {
  int code;
  std::string message;
};

int exit_code_for(psdvec_status s) {
  switch (s) {
    case PSDVEC_OK:
      return kExitOk;
    case PSDVEC_E_INVALID_ARGUMENT:
      return kExitUsage;
    case PSDVEC_E_NUMERICAL:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

void check(psdvec_status s) {
  if (s != PSDVEC_OK) throw CliFailure{exit_code_for(s), std::string(psdvec_status_name(s)) + ": " + psdvec_last_error()};
}

void usage_error(const std::string& message) { throw CliFailure{kExitUsage, message}; }

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using VocabPtr = std::unique_ptr<psdvec_vocab, Deleter<psdvec_vocab, psdvec_vocab_free>>;
using BigramsPtr = std::unique_ptr<psdvec_bigrams, Deleter<psdvec_bigrams, psdvec_bigrams_free>>;
using EmbeddingsPtr = std::unique_ptr<psdvec_embeddings, Deleter<psdvec_embeddings, psdvec_embeddings_free>>;

VocabPtr load_vocab(const std::string& path) {
  psdvec_vocab* v = nullptr;
  check(psdvec_vocab_load(path.c_str(), &v));
  return VocabPtr(v);
}

BigramsPtr load_bigrams(const std::string& path, const psdvec_vocab* vocab) {
  psdvec_bigrams* b = nullptr;
  check(psdvec_bigrams_load(path.c_str(), vocab, &b));
  return BigramsPtr(b);
}

EmbeddingsPtr load_embeddings(const std::string& path) {
  psdvec_embeddings* e = nullptr;
  check(psdvec_embeddings_load(path.c_str(), &e));
  return EmbeddingsPtr(e);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// One manifest per run, next to the primary output.
void write_manifest(const std::string& output, json manifest) {
  const std::string path = output + ".manifest.json";
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << manifest.dump(2) << '\n';
    if (!out) throw CliFailure{kExitData, "cannot write manifest " + tmp};
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw CliFailure{kExitData, "cannot rename " + tmp + ": " + ec.message()};
}

json manifest_header(const std::string& subcommand) {
  json m;
  m["subcommand"] = subcommand;
  m["tool_version"] = psdvec_version();
  return m;
}

struct TokenOptions {
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::string sentinel;
  bool no_split = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--alphabet", alphabet, "Characters a token may contain after lowercasing")
        ->capture_default_str();
    cmd->add_option("--doc-sentinel", sentinel, "Line that ends a document (default: blank line)");
    cmd->add_flag("--no-doc-split", no_split, "Let the window run across document boundaries");
  }
  psdvec_token_rules rules() const {
    psdvec_token_rules r;
    psdvec_token_rules_default(&r);
    r.alphabet = alphabet.c_str();
    r.document_sentinel = sentinel.c_str();
    r.split_documents = no_split ? 0 : 1;
    return r;
  }
  json to_json() const { return {{"alphabet", alphabet}, {"doc_sentinel", sentinel}, {"doc_split", !no_split}}; }
};

struct StatsOptions {
  double lambda = 0.1;
  double alpha = 0.5;
  double cap = 0.0;
  bool no_normalize = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--lambda", lambda, "Jelinek-Mercer interpolation weight in [0,1]")->capture_default_str();
    cmd->add_option("--alpha", alpha, "Weight exponent: f(p) = min(p, cap)^alpha")->capture_default_str();
    cmd->add_option("--cap", cap, "Weight cap on the smoothed probability (0: none)")->capture_default_str();
    cmd->add_flag("--no-normalize", no_normalize, "Do not scale weights by the core-block maximum");
  }
  psdvec_stats_config config() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) usage_error("--lambda must lie in [0, 1]");
    if (!(alpha > 0.0)) usage_error("--alpha must be > 0");
    if (cap < 0.0) usage_error("--cap must be >= 0");
    psdvec_stats_config c;
    psdvec_stats_config_default(&c);
    c.lambda = lambda;
    c.alpha = alpha;
    c.cap = cap;
    c.normalize = no_normalize ? 0 : 1;
    return c;
  }
  json to_json() const {
    return {{"lambda", lambda}, {"alpha", alpha}, {"cap", cap}, {"normalize", !no_normalize}};
  }
};

void require_file(const std::string& path, const char* flag) {
  if (!fs::exists(path)) throw CliFailure{kExitData, std::string(flag) + ": no such file: " + path};
}

// ---------------------------------------------------------------- subcommands

struct CountUnigrams {
  std::string input, out;
  std::uint64_t min_count = 1;
  TokenOptions tokens;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("count-unigrams", "Count word frequencies and write the unigram file");
    cmd->add_option("--input", input, "Corpus text file")->required();
    cmd->add_option("--min-count", min_count, "Drop words seen fewer times")->capture_default_str();
    cmd->add_option("--out", out, "Unigram file to write")->required();
    tokens.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    if (min_count < 1) usage_error("--min-count must be >= 1");
    require_file(input, "--input");
    Stopwatch clock;
    const auto rules = tokens.rules();
    psdvec_vocab* raw = nullptr;
    check(psdvec_vocab_count(input.c_str(), min_count, &rules, &raw));
    VocabPtr vocab(raw);
    check(psdvec_vocab_save(vocab.get(), out.c_str()));
    auto m = manifest_header("count-unigrams");
    m["config"] = {{"min_count", min_count}, {"tokens", tokens.to_json()}};
    m["inputs"] = {{"input", input}};
    m["outputs"] = {{"unigrams", out}};
    m["result"] = {{"vocabulary_size", psdvec_vocab_size(vocab.get())},
                   {"total_tokens", psdvec_vocab_total_tokens(vocab.get())}};
    m["wall_seconds"] = clock.seconds();
    write_manifest(out, m);
    std::cerr << "vocabulary: " << psdvec_vocab_size(vocab.get()) << " words from "
              << psdvec_vocab_total_tokens(vocab.get()) << " tokens\n";
  }
};

struct CountBigrams {
  std::string input, unigrams, out;
  int window = 3;
  unsigned threads = 1;
  TokenOptions tokens;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("count-bigrams", "Count in-window word pairs and write the bigram file");
    cmd->add_option("--input", input, "Corpus text file")->required();
    cmd->add_option("--unigrams", unigrams, "Unigram file from count-unigrams")->required();
    cmd->add_option("--window", window, "Pairs (t, t+k) are counted for 1 <= k <= window")->capture_default_str();
    cmd->add_option("--out", out, "Bigram file to write")->required();
    cmd->add_option("--threads", threads, "Counting threads")->capture_default_str();
    tokens.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    if (window < 1) usage_error("--window must be >= 1");
    require_file(input, "--input");
    require_file(unigrams, "--unigrams");
    Stopwatch clock;
    auto vocab = load_vocab(unigrams);
    const auto rules = tokens.rules();
    psdvec_bigrams* raw = nullptr;
    check(psdvec_bigrams_count(input.c_str(), vocab.get(), window, &rules, threads, &raw));
    BigramsPtr bigrams(raw);
    check(psdvec_bigrams_save(bigrams.get(), out.c_str()));
    auto m = manifest_header("count-bigrams");
    m["config"] = {{"window", window}, {"threads", threads}, {"tokens", tokens.to_json()}};
    m["inputs"] = {{"input", input}, {"unigrams", unigrams}};
    m["outputs"] = {{"bigrams", out}};
    m["result"] = {{"total_pairs", psdvec_bigrams_total_pairs(bigrams.get())},
                   {"distinct_pairs", psdvec_bigrams_nonzeros(bigrams.get())}};
    m["wall_seconds"] = clock.seconds();
    write_manifest(out, m);
    std::cerr << "bigrams: " << psdvec_bigrams_total_pairs(bigrams.get()) << " pairs, "
              << psdvec_bigrams_nonzeros(bigrams.get()) << " distinct\n";
  }
};

struct FactorizeCore {
  std::string bigrams_path, unigrams, out;
  std::size_t core_size = 0, dim = 50;
  int iters = 20;
  double tol = 1e-4;
  StatsOptions stats;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("factorize-core", "Embed the most frequent words by weighted PSD approximation");
    cmd->add_option("--bigrams", bigrams_path, "Bigram file")->required();
    cmd->add_option("--unigrams", unigrams, "Unigram file the bigrams were counted with")->required();
    cmd->add_option("--core-size", core_size, "Number of core words")->required();
    cmd->add_option("--dim", dim, "Embedding dimension")->capture_default_str();
    cmd->add_option("--iters", iters, "Maximum EM iterations")->capture_default_str();
    cmd->add_option("--tol", tol, "Stop when the residual drops by less than tol (relative)")->capture_default_str();
    cmd->add_option("--out", out, ".vec file to write")->required();
    stats.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    if (dim < 1) usage_error("--dim must be >= 1");
    if (iters < 1) usage_error("--iters must be >= 1");
    if (!(tol > 0.0)) usage_error("--tol must be > 0");
    const auto scfg = stats.config();
    require_file(unigrams, "--unigrams");
    require_file(bigrams_path, "--bigrams");
    Stopwatch clock;
    auto vocab = load_vocab(unigrams);
    auto bigrams = load_bigrams(bigrams_path, vocab.get());
    const double load_seconds = clock.seconds();

    psdvec_core_config cfg;
    psdvec_core_config_default(&cfg);
    cfg.core_size = core_size;
    cfg.dim = dim;
    cfg.max_iters = iters;
    cfg.tol = tol;
    std::vector<double> residuals;
    auto on_iteration = [](void* user, int t, double r) {
      static_cast<std::vector<double>*>(user)->push_back(r);
      std::fprintf(stderr, "iteration %d: weighted residual %.10g\n", t, r);
    };
    psdvec_embeddings* raw = nullptr;
    psdvec_core_result result{};
    check(psdvec_factorize_core(bigrams.get(), &scfg, &cfg, on_iteration, &residuals, &raw, &result));
    EmbeddingsPtr set(raw);
    const double solve_seconds = clock.seconds() - load_seconds;
    check(psdvec_embeddings_save(set.get(), out.c_str()));

    auto m = manifest_header("factorize-core");
    m["config"] = {{"core_size", core_size}, {"dim", dim}, {"iters", iters}, {"tol", tol},
                   {"stats", stats.to_json()}};
    m["inputs"] = {{"bigrams", bigrams_path}, {"unigrams", unigrams}};
    m["outputs"] = {{"vec", out}};
    m["result"] = {{"iterations", result.iterations},
                   {"converged", result.converged != 0},
                   {"initial_residual", result.initial_residual},
                   {"residuals", residuals}};
    m["stages"] = {{"load_seconds", load_seconds}, {"solve_seconds", solve_seconds}};
    m["wall_seconds"] = clock.seconds();
    write_manifest(out, m);
  }
};

struct FactorizeNoncore {
  std::string bigrams_path, unigrams, core_vec, out;
  std::size_t core_size = 0, count = 0;
  double mu = 0.0;
  unsigned threads = 1;
  StatsOptions stats;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("factorize-noncore",
                                   "Add the next vocabulary words by ridge regression against fixed core embeddings");
    cmd->add_option("--bigrams", bigrams_path, "Bigram file")->required();
    cmd->add_option("--unigrams", unigrams, "Unigram file the bigrams were counted with")->required();
    cmd->add_option("--core-vec", core_vec, "Existing embeddings; its first --core-size words are the core")
        ->required();
    cmd->add_option("--core-size", core_size, "Core words at the head of --core-vec (0: all)")
        ->capture_default_str();
    cmd->add_option("--count", count, "Number of new words to embed")->required();
    cmd->add_option("--mu", mu, "Tikhonov coefficient for the new words")->capture_default_str();
    cmd->add_option("--threads", threads, "Solver threads")->capture_default_str();
    cmd->add_option("--out", out, ".vec file to write (input words followed by the new ones)")->required();
    stats.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    if (!(mu >= 0.0) || !std::isfinite(mu)) usage_error("--mu must be finite and >= 0");
    const auto scfg = stats.config();
    require_file(unigrams, "--unigrams");
    require_file(bigrams_path, "--bigrams");
    require_file(core_vec, "--core-vec");
    Stopwatch clock;
    auto vocab = load_vocab(unigrams);
    auto bigrams = load_bigrams(bigrams_path, vocab.get());
    auto base = load_embeddings(core_vec);
    const double load_seconds = clock.seconds();

    psdvec_embeddings* raw = nullptr;
    psdvec_noncore_result r{};
    check(psdvec_factorize_noncore(bigrams.get(), base.get(), core_size, count, mu, &scfg, threads, &raw, &r));
    EmbeddingsPtr set(raw);
    check(psdvec_embeddings_save(set.get(), out.c_str()));

    if (r.core_missing > 0)
      std::cerr << "warning: " << r.core_missing << " core words of " << core_vec
                << " are not in the vocabulary and were skipped (core coverage " << r.core_used << "/"
                << (r.core_used + r.core_missing) << ")\n";
    if (r.words_added < count)
      std::cerr << "warning: only " << r.words_added << " new vocabulary words were available\n";
    std::cerr << "group\twords\tmu\tdegenerate\tempty_rows\tseconds\n"
              << "noncore\t" << r.words_added << '\t' << mu << '\t' << r.degenerate << '\t' << r.empty_rows << '\t'
              << r.seconds << '\n'
              << "total words: " << psdvec_embeddings_size(set.get()) << '\n';

    auto m = manifest_header("factorize-noncore");
    m["config"] = {{"core_size", core_size}, {"count", count}, {"mu", mu}, {"threads", threads},
                   {"stats", stats.to_json()}};
    m["inputs"] = {{"bigrams", bigrams_path}, {"unigrams", unigrams}, {"core_vec", core_vec}};
    m["outputs"] = {{"vec", out}};
    m["result"] = {{"words_added", r.words_added},       {"total_words", psdvec_embeddings_size(set.get())},
                   {"degenerate", r.degenerate},         {"core_used", r.core_used},
                   {"core_missing", r.core_missing},     {"empty_rows", r.empty_rows},
                   {"weight_scale", r.weight_scale}};
    m["stages"] = {{"load_seconds", load_seconds}, {"solve_seconds", r.seconds}};
    m["wall_seconds"] = clock.seconds();
    write_manifest(out, m);
  }
};

struct Evaluate {
  std::string vec, testset_dir, out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("evaluate", "Score embeddings on the testsets in a directory");
    cmd->add_option("--vec", vec, ".vec file")->required();
    cmd->add_option("--testset-dir", testset_dir, "Directory of .sim/.analogy/.choice files")->required();
    cmd->add_option("--out", out, "Report file (default: <vec>.eval.txt)");
    cmd->callback([this] { run(); });
  }

  void run() {
    require_file(vec, "--vec");
    if (!fs::is_directory(testset_dir)) throw CliFailure{kExitData, "--testset-dir: not a directory: " + testset_dir};
    if (out.empty()) out = vec + ".eval.txt";
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(testset_dir))
      if (e.is_regular_file() && psdvec_testset_kind_of(e.path().c_str()) != PSDVEC_TESTSET_UNKNOWN)
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw CliFailure{kExitData, "no testsets (.sim, .analogy, .choice) in " + testset_dir};

    Stopwatch clock;
    auto set = load_embeddings(vec);
    std::vector<psdvec_eval_report> reports;
    json skipped = json::array();
    for (const auto& f : files) {
      psdvec_eval_report rep{};
      const auto s = psdvec_evaluate_file(set.get(), f.c_str(), &rep);
      if (s == PSDVEC_E_DOMAIN) {
        std::cerr << "warning: " << f.filename().string() << " not scored: " << psdvec_last_error() << '\n';
        skipped.push_back({{"testset", f.stem().string()}, {"reason", psdvec_last_error()},
                           {"covered", rep.covered}, {"total", rep.total}});
        continue;
      }
      check(s);
      reports.push_back(rep);
    }
    if (reports.empty()) throw CliFailure{kExitData, "no testset could be scored"};

    const std::size_t need = psdvec_format_reports(reports.data(), reports.size(), nullptr, 0);
    std::string text(need + 1, '\0');
    psdvec_format_reports(reports.data(), reports.size(), text.data(), text.size());
    text.resize(need);
    std::cout << text;
    {
      const std::string tmp = out + ".tmp";
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      f << text;
      if (!f) throw CliFailure{kExitData, "cannot write " + tmp};
      f.close();
      fs::rename(tmp, out);
    }

    auto m = manifest_header("evaluate");
    m["config"] = json::object();
    m["inputs"] = {{"vec", vec}, {"testset_dir", testset_dir}};
    m["outputs"] = {{"report", out}};
    json results = json::array();
    for (const auto& r : reports)
      results.push_back({{"testset", r.testset}, {"metric", r.metric}, {"value", r.value},
                         {"covered", r.covered}, {"total", r.total}, {"coverage", r.coverage}});
    m["result"] = {{"reports", results}, {"skipped", skipped}};
    m["wall_seconds"] = clock.seconds();
    write_manifest(out, m);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psdvec: word embeddings by weighted low-rank PSD approximation of PMI"};
  app.set_version_flag("--version", std::string(psdvec_version()));
  app.require_subcommand(1);
  CountUnigrams count_unigrams;
  CountBigrams count_bigrams;
  FactorizeCore factorize_core;
  FactorizeNoncore factorize_noncore;
  Evaluate evaluate;
  count_unigrams.add(app);
  count_bigrams.add(app);
  factorize_core.add(app);
  factorize_noncore.add(app);
  evaluate.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  } catch (const CliFailure& f) {
    std::cerr << "psdvec: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "psdvec: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
