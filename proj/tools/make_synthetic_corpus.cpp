// Deterministic topic-mixture corpus plus matching mini testsets.
//
// Every content word belongs to one topic; a document draws most of its
// tokens from a single topic and the rest from a shared pool of function
// words. Words of the same topic therefore co-occur far more than chance,
// which is the signal the similarity/choice fixtures test for.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

// splitmix64: the output must not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::uint64_t state_;
};

class Zipf {
 public:
  Zipf(std::size_t n, double s) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) cdf_[k] = acc += 1.0 / std::pow(static_cast<double>(k + 1), s);
    for (double& c : cdf_) c /= acc;
  }
  std::size_t draw(Rng& rng) const {
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), rng.uniform());
    return std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

// Pronounceable, letters-only and unique for every index below 100^3.
std::string pseudo_word(std::size_t i) {
  static const char* consonants = "bcdfghjklmnprstvwxyz";
  static const char* vowels = "aeiou";
  std::string w;
  std::size_t syllables = i < 100 ? 2 : 3;
  std::size_t code = i;
  for (std::size_t s = 0; s < syllables; ++s) {
    const std::size_t syl = code % 100;
    code /= 100;
    w += consonants[syl / 5];
    w += vowels[syl % 5];
  }
  return w;
}

struct Lexicon {
  std::vector<std::string> function_words;
  std::vector<std::vector<std::string>> topics;  // topic -> words by frequency rank
};

Lexicon make_lexicon(std::size_t function_words, std::size_t topics, std::size_t per_topic) {
  Lexicon lex;
  for (std::size_t i = 0; i < function_words; ++i) lex.function_words.push_back(pseudo_word(i));
  lex.topics.resize(topics);
  // Indices >= 100 are three syllables, so they never collide with function words.
  std::size_t next = 100;
  for (std::size_t r = 0; r < per_topic; ++r)
    for (std::size_t t = 0; t < topics; ++t) lex.topics[t].push_back(pseudo_word(next++));
  return lex;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Write a deterministic synthetic corpus and mini testsets"};
  std::string out_dir;
  std::size_t tokens = 1000000, topics = 40, per_topic = 150, function_words = 100, doc_lines = 10,
              line_tokens = 20;
  double topic_share = 0.6;
  std::uint64_t seed = 20260101;
  app.add_option("--out-dir", out_dir, "Output directory")->required();
  app.add_option("--tokens", tokens, "Approximate corpus size")->capture_default_str();
  app.add_option("--topics", topics)->capture_default_str();
  app.add_option("--words-per-topic", per_topic)->capture_default_str();
  app.add_option("--function-words", function_words)->capture_default_str();
  app.add_option("--topic-share", topic_share, "Fraction of tokens drawn from the document topic")
      ->capture_default_str();
  app.add_option("--seed", seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  if (topics < 2 || per_topic < 10 || function_words < 1 || function_words > 100) {
    std::cerr << "need topics >= 2, words-per-topic >= 10, 1 <= function-words <= 100\n";
    return 1;
  }

  try {
    const fs::path dir(out_dir);
    fs::create_directories(dir / "testsets");
    const Lexicon lex = make_lexicon(function_words, topics, per_topic);
    Rng rng(seed);
    const Zipf function_zipf(function_words, 1.0);
    const Zipf topic_zipf(per_topic, 1.0);

    std::string corpus;
    corpus.reserve(tokens * 8);
    std::size_t written = 0;
    while (written < tokens) {
      const std::size_t topic = rng.below(topics);
      for (std::size_t l = 0; l < doc_lines && written < tokens; ++l) {
        for (std::size_t k = 0; k < line_tokens; ++k, ++written) {
          if (k) corpus += ' ';
          if (rng.uniform() < topic_share)
            corpus += lex.topics[topic][topic_zipf.draw(rng)];
          else
            corpus += lex.function_words[function_zipf.draw(rng)];
        }
        corpus += '\n';
      }
      corpus += '\n';
    }
    write_file(dir / "corpus.txt", corpus);

    // Fixture words come from the frequent half of each topic so they land
    // in the core or the first noncore stages.
    const std::size_t head = per_topic / 2;
    auto pick = [&](std::size_t t) { return lex.topics[t][rng.below(head)]; };

    std::string sim = "# word1\tword2\tscore\n";
    for (std::size_t i = 0; i < 120; ++i) {
      const std::size_t t = rng.below(topics);
      std::string a = pick(t), b;
      double score;
      if (i % 2 == 0) {
        do b = pick(t);
        while (b == a);
        score = 6.0 + 4.0 * rng.uniform();
      } else {
        std::size_t u;
        do u = rng.below(topics);
        while (u == t);
        b = pick(u);
        score = 3.0 * rng.uniform();
      }
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", score);
      sim += a + '\t' + b + '\t' + buf + '\n';
    }
    write_file(dir / "testsets" / "synthetic.sim", sim);

    // a and b share a topic, as do a* and b*.
    std::string analogy = ": topic-pairs\n";
    for (std::size_t i = 0; i < 60; ++i) {
      const std::size_t t = rng.below(topics);
      std::size_t u;
      do u = rng.below(topics);
      while (u == t);
      std::string a = pick(t), b, as = pick(u), bs;
      do b = pick(t);
      while (b == a);
      do bs = pick(u);
      while (bs == as);
      analogy += a + ' ' + as + ' ' + b + ' ' + bs + '\n';
    }
    write_file(dir / "testsets" / "synthetic.analogy", analogy);

    std::string choice = "# probe | c0 c1 c2 c3 | answer\n";
    for (std::size_t i = 0; i < 60; ++i) {
      const std::size_t t = rng.below(topics);
      const std::string probe = pick(t);
      const std::size_t answer = rng.below(4);
      std::string line = probe + " |";
      for (std::size_t c = 0; c < 4; ++c) {
        std::string w;
        if (c == answer) {
          do w = pick(t);
          while (w == probe);
        } else {
          std::size_t u;
          do u = rng.below(topics);
          while (u == t);
          w = pick(u);
        }
        line += ' ' + w;
      }
      choice += line + " | " + std::to_string(answer) + '\n';
    }
    write_file(dir / "testsets" / "synthetic.choice", choice);
    std::cerr << "wrote " << written << " tokens to " << (dir / "corpus.txt").string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "make_synthetic_corpus: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
