#pragma once

// Word similarity (Spearman), analogy (3CosMul) and multiple-choice synonym
// benchmarks over an EmbeddingSet.
//
// Testset files, one item per line, '#' starts a comment:
//   *.sim      w1<TAB>w2<TAB>score
//   *.analogy  a a* b b*          (a is to a* as b is to b*)
//   *.choice   probe | c1 c2 c3 c4 | answer_index (0-based)

#include <Eigen/Dense>
#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embedding_set.hpp"
#include "errors.hpp"

namespace psdvec {

struct SimilarityItem {
  std::string first, second;
  double score = 0.0;
};

struct AnalogyItem {
  std::string a, a_star, b, b_star;
};

struct ChoiceItem {
  std::string probe;
  std::array<std::string, 4> candidates;
  int answer = 0;
};

struct SimilarityTestset {
  std::string name;
  std::vector<SimilarityItem> items;
};

struct AnalogyTestset {
  std::string name;
  std::vector<AnalogyItem> items;
};

struct ChoiceTestset {
  std::string name;
  std::vector<ChoiceItem> items;
};

struct EvalReport {
  std::string testset;
  std::string metric;  // "spearman" or "accuracy"
  double value = 0.0;
  std::size_t total = 0;
  std::size_t covered = 0;
  double coverage() const { return total ? static_cast<double>(covered) / static_cast<double>(total) : 0.0; }
};

// Raised when a testset cannot be scored; carries the coverage that was reached.
class EvaluationError : public DomainError {
 public:
  EvaluationError(const std::string& what, EvalReport report) : DomainError(what), report_(std::move(report)) {}
  const EvalReport& report() const { return report_; }

 private:
  EvalReport report_;
};

double cosine(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v);

// Ranks starting at 1; tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> xs);
double spearman(std::span<const double> xs, std::span<const double> ys);

inline constexpr double kCosMulEpsilon = 0.001;

// Words whose vector is zero have no direction and count as out of vocabulary.
EvalReport eval_similarity(const EmbeddingSet& set, const SimilarityTestset& testset);
EvalReport eval_analogy_3cosmul(const EmbeddingSet& set, const AnalogyTestset& testset);
EvalReport eval_choice(const EmbeddingSet& set, const ChoiceTestset& testset);

// 3CosMul prediction for one query over the whole set; nullopt if a query
// word is missing.
std::optional<std::size_t> predict_3cosmul(const EmbeddingSet& set, const std::string& a, const std::string& a_star,
                                           const std::string& b);

SimilarityTestset read_similarity(std::istream& in, const std::string& name);
AnalogyTestset read_analogy(std::istream& in, const std::string& name);
ChoiceTestset read_choice(std::istream& in, const std::string& name);

enum class TestsetKind { Similarity, Analogy, Choice };
std::optional<TestsetKind> testset_kind(const std::filesystem::path& path);

EvalReport evaluate_file(const EmbeddingSet& set, const std::filesystem::path& path);
// Every recognized testset in `dir`, sorted by file name.
std::vector<std::filesystem::path> list_testsets(const std::filesystem::path& dir);

// Aligned table followed by key=value lines.
std::string format_reports(const std::vector<EvalReport>& reports);

}  // namespace psdvec
