#pragma once

// Smoothed bigram probabilities, PMI blocks and weight blocks built from a
// CooccurrenceTable.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "corpus.hpp"

namespace psdvec {

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool operator==(const IndexRange&) const = default;
};

class UnigramDistribution {
 public:
  explicit UnigramDistribution(std::vector<double> probs);
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

struct SmoothingConfig {
  double lambda = 0.1;  // weight of the unigram-product back-off
  void validate() const;
};

struct WeightConfig {
  double alpha = 0.5;
  std::optional<double> cap;
  bool normalize = true;
  void validate() const;
};

struct PmiBlock {
  IndexRange rows, cols;
  Eigen::MatrixXd values;
};

struct WeightBlock {
  IndexRange rows, cols;
  Eigen::MatrixXd values;
};

UnigramDistribution unigram_distribution(const Vocabulary& vocab);

// (1-lambda) * (c(i,j) + c(j,i)) / (2 T) + lambda * P(i) P(j)
double smoothed_bigram_prob(std::size_t i, std::size_t j, const CooccurrenceTable& table,
                            const UnigramDistribution& uni, const SmoothingConfig& cfg);

// min(p, cap)^alpha; normalization is applied by the block builders.
double weight_transform(double p, const WeightConfig& cfg);

// Largest unnormalized weight over the (core x core) block, computed from the
// sparse table without materializing the block.
double core_weight_scale(std::span<const std::uint32_t> core, const CooccurrenceTable& table,
                         const UnigramDistribution& uni, const SmoothingConfig& smoothing,
                         const WeightConfig& weight);

// Dense PMI and weight blocks for rows x cols. Entries with zero smoothed mass
// get PMI 0 and weight 0. With cfg.normalize, weights are divided by
// `scale` when given, otherwise by the block maximum.
std::pair<PmiBlock, WeightBlock> pmi_block(IndexRange rows, IndexRange cols, const CooccurrenceTable& table,
                                           const UnigramDistribution& uni, const SmoothingConfig& smoothing,
                                           const WeightConfig& weight, std::optional<double> scale = std::nullopt);

// Builds one word's PMI and weight row against a fixed list of core words,
// for the incremental solver. Core words never seen together with the word
// are masked (PMI 0, weight 0).
class CoreRowBuilder {
 public:
  CoreRowBuilder(const CooccurrenceTable& table, const UnigramDistribution& uni, SmoothingConfig smoothing,
                 WeightConfig weight, std::vector<std::uint32_t> core, double scale);

  std::size_t core_size() const { return core_.size(); }
  const std::vector<std::uint32_t>& core() const { return core_; }
  double scale() const { return scale_; }

  // g and w must have core_size() entries. Returns the number of unmasked entries.
  std::size_t build(std::uint32_t word, std::span<double> g, std::span<double> w) const;

 private:
  const CooccurrenceTable& table_;
  const UnigramDistribution& uni_;
  SmoothingConfig smoothing_;
  WeightConfig weight_;
  std::vector<std::uint32_t> core_;
  std::vector<std::int32_t> position_;  // vocabulary index -> core position or -1
  double scale_;
};

}  // namespace psdvec
