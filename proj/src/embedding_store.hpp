#pragma once

// word2vec-style text format:
//   <n> <d>
//   <word> <f1> ... <fd>
// Values are written with 6 significant digits.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "embedding_set.hpp"

namespace psdvec {

void write_vec(const EmbeddingSet& set, std::ostream& out);
void save_vec(const EmbeddingSet& set, const std::filesystem::path& path);

EmbeddingSet read_vec(std::istream& in, const std::string& source);
EmbeddingSet load_vec(const std::filesystem::path& path);

}  // namespace psdvec
