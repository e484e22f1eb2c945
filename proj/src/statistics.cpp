#include "statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "errors.hpp"

namespace psdvec {

UnigramDistribution::UnigramDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw DomainError("unigram distribution: empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p > 0.0)) throw DomainError("unigram distribution: non-positive probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("unigram distribution: probabilities do not sum to 1");
}

void SmoothingConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("smoothing lambda must lie in [0, 1]");
}

void WeightConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("weight exponent alpha must be > 0");
  if (cap && !(*cap > 0.0)) throw DomainError("weight cap must be > 0");
}

UnigramDistribution unigram_distribution(const Vocabulary& vocab) {
  if (vocab.empty()) throw DomainError("unigram distribution of an empty vocabulary");
  const auto& counts = vocab.counts();
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  std::vector<double> probs(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) probs[i] = static_cast<double>(counts[i]) / total;
  return UnigramDistribution(std::move(probs));
}

namespace {

double smooth(double symmetric_count, double total_pairs, double pi, double pj, double lambda) {
  return (1.0 - lambda) * (symmetric_count / (2.0 * total_pairs)) + lambda * (pi * pj);  // pi * pj keeps G exactly symmetric
}

void check_tables(const CooccurrenceTable& table, const UnigramDistribution& uni) {
  if (table.total_pairs() == 0) throw DomainError("cooccurrence table has no pairs");
  if (table.vocab_size() != uni.size()) throw DomainError("cooccurrence table and unigram sizes differ");
}

}  // namespace

double smoothed_bigram_prob(std::size_t i, std::size_t j, const CooccurrenceTable& table,
                            const UnigramDistribution& uni, const SmoothingConfig& cfg) {
  cfg.validate();
  check_tables(table, uni);
  if (i >= uni.size() || j >= uni.size()) throw DomainError("bigram index out of range");
  const double sym = static_cast<double>(table.count(i, j) + table.count(j, i));
  return smooth(sym, static_cast<double>(table.total_pairs()), uni[i], uni[j], cfg.lambda);
}

double weight_transform(double p, const WeightConfig& cfg) {
  if (p <= 0.0) return 0.0;
  const double x = cfg.cap ? std::min(p, *cfg.cap) : p;
  return std::pow(x, cfg.alpha);
}

double core_weight_scale(std::span<const std::uint32_t> core, const CooccurrenceTable& table,
                         const UnigramDistribution& uni, const SmoothingConfig& smoothing,
                         const WeightConfig& weight) {
  smoothing.validate();
  weight.validate();
  check_tables(table, uni);
  if (core.empty()) throw DomainError("empty core word list");
  std::vector<char> in_core(table.vocab_size(), 0);
  std::uint32_t top = core.front();
  for (auto i : core) {
    if (i >= table.vocab_size()) throw DomainError("core index out of range");
    in_core[i] = 1;
    if (uni[i] > uni[top]) top = i;
  }
  // Smoothed mass is (1-l) * sym + l * P_i P_j. Pairs without counts are
  // dominated by the most probable core word paired with itself.
  double best = smoothed_bigram_prob(top, top, table, uni, smoothing);
  for (auto i : core) {
    for (const auto& cc : table.row(i)) {
      if (!in_core[cc.context]) continue;
      best = std::max(best, smoothed_bigram_prob(i, cc.context, table, uni, smoothing));
    }
  }
  return weight_transform(best, weight);
}

std::pair<PmiBlock, WeightBlock> pmi_block(IndexRange rows, IndexRange cols, const CooccurrenceTable& table,
                                           const UnigramDistribution& uni, const SmoothingConfig& smoothing,
                                           const WeightConfig& weight, std::optional<double> scale) {
  smoothing.validate();
  weight.validate();
  check_tables(table, uni);
  if (rows.begin > rows.end || cols.begin > cols.end || rows.end > uni.size() || cols.end > uni.size())
    throw DomainError("pmi block: index range out of bounds");

  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(nr, nc);
  auto in = [](IndexRange r, std::size_t k) { return k >= r.begin && k < r.end; };
  for (std::size_t i = rows.begin; i < rows.end; ++i)
    for (const auto& cc : table.row(i))
      if (in(cols, cc.context))
        sym(static_cast<Eigen::Index>(i - rows.begin), static_cast<Eigen::Index>(cc.context - cols.begin)) +=
            static_cast<double>(cc.count);
  for (std::size_t j = cols.begin; j < cols.end; ++j)
    for (const auto& cc : table.row(j))
      if (in(rows, cc.context))
        sym(static_cast<Eigen::Index>(cc.context - rows.begin), static_cast<Eigen::Index>(j - cols.begin)) +=
            static_cast<double>(cc.count);

  PmiBlock g{rows, cols, Eigen::MatrixXd::Zero(nr, nc)};
  WeightBlock w{rows, cols, Eigen::MatrixXd::Zero(nr, nc)};
  const double total = static_cast<double>(table.total_pairs());
  for (Eigen::Index c = 0; c < nc; ++c) {
    const double pj = uni[cols.begin + static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < nr; ++r) {
      const double pi = uni[rows.begin + static_cast<std::size_t>(r)];
      const double p = smooth(sym(r, c), total, pi, pj, smoothing.lambda);
      if (p <= 0.0) continue;
      g.values(r, c) = std::log(p / (pi * pj));
      w.values(r, c) = weight_transform(p, weight);
    }
  }
  if (weight.normalize && w.values.size() > 0) {
    const double s = scale ? *scale : w.values.maxCoeff();
    if (s > 0.0) w.values /= s;
  }
  return {std::move(g), std::move(w)};
}

CoreRowBuilder::CoreRowBuilder(const CooccurrenceTable& table, const UnigramDistribution& uni,
                               SmoothingConfig smoothing, WeightConfig weight, std::vector<std::uint32_t> core,
                               double scale)
    : table_(table),
      uni_(uni),
      smoothing_(smoothing),
      weight_(weight),
      core_(std::move(core)),
      position_(table.vocab_size(), -1),
      scale_(scale) {
  smoothing_.validate();
  weight_.validate();
  check_tables(table_, uni_);
  if (weight_.normalize && !(scale_ > 0.0)) throw DomainError("weight normalization scale must be > 0");
  for (std::size_t k = 0; k < core_.size(); ++k) {
    if (core_[k] >= table_.vocab_size()) throw DomainError("core index out of range");
    position_[core_[k]] = static_cast<std::int32_t>(k);
  }
}

std::size_t CoreRowBuilder::build(std::uint32_t word, std::span<double> g, std::span<double> w) const {
  if (g.size() != core_.size() || w.size() != core_.size()) throw DomainError("row buffers must match core size");
  if (word >= table_.vocab_size()) throw DomainError("word index out of range");
  std::fill(g.begin(), g.end(), 0.0);
  std::fill(w.begin(), w.end(), 0.0);
  // Accumulate symmetrized counts into g, then transform in place.
  for (const auto& cc : table_.row(word)) {
    const auto k = position_[cc.context];
    if (k >= 0) g[static_cast<std::size_t>(k)] += static_cast<double>(cc.count);
  }
  for (std::size_t k = 0; k < core_.size(); ++k) g[k] += static_cast<double>(table_.count(core_[k], word));

  const double total = static_cast<double>(table_.total_pairs());
  const double pi = uni_[word];
  std::size_t observed = 0;
  for (std::size_t k = 0; k < core_.size(); ++k) {
    const double sym = g[k];
    if (sym <= 0.0) {
      g[k] = 0.0;
      continue;
    }
    const double pj = uni_[core_[k]];
    const double p = smooth(sym, total, pi, pj, smoothing_.lambda);
    g[k] = std::log(p / (pi * pj));
    w[k] = weight_transform(p, weight_);
    if (weight_.normalize) w[k] /= scale_;
    ++observed;
  }
  return observed;
}

}  // namespace psdvec
