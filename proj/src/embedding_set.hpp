#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace psdvec {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Word -> d-dimensional vector map. Row i of vectors() belongs to word(i).
class EmbeddingSet {
 public:
  explicit EmbeddingSet(std::size_t dim = 0) : vectors_(0, static_cast<Eigen::Index>(dim)) {}
  // Throws DomainError on duplicate words, a row-count mismatch or non-finite entries.
  EmbeddingSet(std::vector<std::string> words, RowMatrix vectors);

  std::size_t size() const { return words_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  bool empty() const { return words_.empty(); }
  const std::string& word(std::size_t i) const { return words_.at(i); }
  const std::vector<std::string>& words() const { return words_; }
  const RowMatrix& vectors() const { return vectors_; }
  auto vector(std::size_t i) const { return vectors_.row(static_cast<Eigen::Index>(i)); }
  std::optional<std::size_t> find(const std::string& word) const;

 private:
  std::vector<std::string> words_;
  RowMatrix vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace psdvec
