#include "evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>

#include "io_util.hpp"

namespace psdvec {

double cosine(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (u.size() != v.size()) throw DomainError("cosine: dimension mismatch");
  const double nu = u.norm(), nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) throw DomainError("cosine: zero vector");
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("spearman: length mismatch");
  if (xs.size() < 2) throw DomainError("spearman: needs at least 2 pairs");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("spearman: undefined for a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

// Unit-normalized rows; zero rows stay zero and are flagged.
struct NormalizedSet {
  RowMatrix unit;
  std::vector<char> usable;

  explicit NormalizedSet(const EmbeddingSet& set) : unit(set.vectors()), usable(set.size(), 0) {
    for (Eigen::Index i = 0; i < unit.rows(); ++i) {
      const double n = unit.row(i).norm();
      if (n > 0.0) {
        unit.row(i) /= n;
        usable[static_cast<std::size_t>(i)] = 1;
      }
    }
  }
};

std::optional<std::size_t> usable_index(const EmbeddingSet& set, const NormalizedSet& ns, const std::string& w) {
  auto i = set.find(w);
  if (!i || !ns.usable[*i]) return std::nullopt;
  return i;
}

std::optional<std::size_t> argmax_3cosmul(const NormalizedSet& ns, std::size_t a, std::size_t a_star,
                                          std::size_t b) {
  const Eigen::VectorXd ca = ns.unit * ns.unit.row(static_cast<Eigen::Index>(a)).transpose();
  const Eigen::VectorXd cs = ns.unit * ns.unit.row(static_cast<Eigen::Index>(a_star)).transpose();
  const Eigen::VectorXd cb = ns.unit * ns.unit.row(static_cast<Eigen::Index>(b)).transpose();
  std::optional<std::size_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index x = 0; x < ca.size(); ++x) {
    const auto xi = static_cast<std::size_t>(x);
    if (xi == a || xi == a_star || xi == b || !ns.usable[xi]) continue;
    auto shift = [](double c) { return (std::clamp(c, -1.0, 1.0) + 1.0) / 2.0; };
    const double score = shift(cb(x)) * shift(cs(x)) / (shift(ca(x)) + kCosMulEpsilon);
    if (score > best_score) {
      best_score = score;
      best = xi;
    }
  }
  return best;
}

}  // namespace

EvalReport eval_similarity(const EmbeddingSet& set, const SimilarityTestset& testset) {
  EvalReport report{testset.name, "spearman", 0.0, testset.items.size(), 0};
  if (testset.items.empty()) throw EvaluationError("similarity testset '" + testset.name + "' is empty", report);
  std::vector<double> predicted, human;
  for (const auto& item : testset.items) {
    auto i = set.find(item.first);
    auto j = set.find(item.second);
    if (!i || !j) continue;
    const auto u = set.vector(*i).transpose();
    const auto v = set.vector(*j).transpose();
    if (u.norm() == 0.0 || v.norm() == 0.0) continue;
    // Cosines are compared on a 1e-12 grid so rounding noise (e.g. after
    // rescaling the vectors) cannot reorder tied pairs.
    const double c = *i == *j ? 1.0 : cosine(u, v);
    predicted.push_back(std::round(c * 1e12) / 1e12);
    human.push_back(item.score);
  }
  report.covered = predicted.size();
  if (report.covered < 2)
    throw EvaluationError("similarity testset '" + testset.name + "': fewer than 2 covered pairs (coverage " +
                              std::to_string(report.covered) + "/" + std::to_string(report.total) + ")",
                          report);
  report.value = spearman(predicted, human);
  return report;
}

std::optional<std::size_t> predict_3cosmul(const EmbeddingSet& set, const std::string& a, const std::string& a_star,
                                           const std::string& b) {
  if (set.size() < 4) throw DomainError("3CosMul needs a vocabulary of at least 4 words");
  NormalizedSet ns(set);
  auto ia = usable_index(set, ns, a), is = usable_index(set, ns, a_star), ib = usable_index(set, ns, b);
  if (!ia || !is || !ib) return std::nullopt;
  return argmax_3cosmul(ns, *ia, *is, *ib);
}

EvalReport eval_analogy_3cosmul(const EmbeddingSet& set, const AnalogyTestset& testset) {
  EvalReport report{testset.name, "accuracy", 0.0, testset.items.size(), 0};
  if (testset.items.empty()) throw EvaluationError("analogy testset '" + testset.name + "' is empty", report);
  if (set.size() < 4) throw EvaluationError("3CosMul needs a vocabulary of at least 4 words", report);
  NormalizedSet ns(set);
  std::size_t correct = 0;
  for (const auto& item : testset.items) {
    auto ia = usable_index(set, ns, item.a), is = usable_index(set, ns, item.a_star);
    auto ib = usable_index(set, ns, item.b), it = usable_index(set, ns, item.b_star);
    if (!ia || !is || !ib || !it) continue;
    ++report.covered;
    auto pred = argmax_3cosmul(ns, *ia, *is, *ib);
    if (pred && *pred == *it) ++correct;
  }
  if (report.covered == 0)
    throw EvaluationError("analogy testset '" + testset.name + "': no covered items", report);
  report.value = static_cast<double>(correct) / static_cast<double>(report.covered);
  return report;
}

EvalReport eval_choice(const EmbeddingSet& set, const ChoiceTestset& testset) {
  EvalReport report{testset.name, "accuracy", 0.0, testset.items.size(), 0};
  if (testset.items.empty()) throw EvaluationError("choice testset '" + testset.name + "' is empty", report);
  NormalizedSet ns(set);
  std::size_t correct = 0;
  for (const auto& item : testset.items) {
    auto probe = usable_index(set, ns, item.probe);
    if (!probe) continue;
    ++report.covered;
    const auto p = ns.unit.row(static_cast<Eigen::Index>(*probe));
    int chosen = -1;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
      auto c = usable_index(set, ns, item.candidates[static_cast<std::size_t>(k)]);
      if (!c) continue;
      const double s = p.dot(ns.unit.row(static_cast<Eigen::Index>(*c)));
      if (s > best) {
        best = s;
        chosen = k;
      }
    }
    if (chosen == item.answer) ++correct;
  }
  if (report.covered == 0) throw EvaluationError("choice testset '" + testset.name + "': no covered items", report);
  report.value = static_cast<double>(correct) / static_cast<double>(report.covered);
  return report;
}

// ---------------------------------------------------------------- loaders

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream is{std::string(line)};
  std::string f;
  while (is >> f) out.push_back(f);
  return out;
}

bool skip_line(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto first = line.find_first_not_of(" \t");
  return first == std::string::npos || line[first] == '#';
}

bool parse_double(std::string_view s, double& x) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(x);
}

}  // namespace

SimilarityTestset read_similarity(std::istream& in, const std::string& name) {
  SimilarityTestset ts{name, {}};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() != 3) f = split_ws(line);
    double score = 0.0;
    if (f.size() != 3 || f[0].empty() || f[1].empty() || !parse_double(f[2], score))
      throw ParseError(name, lineno, "expected 'w1<TAB>w2<TAB>score'");
    ts.items.push_back({lower(f[0]), lower(f[1]), score});
  }
  if (ts.items.size() < 2) throw ParseError(name, lineno, "similarity testset needs at least 2 items");
  return ts;
}

AnalogyTestset read_analogy(std::istream& in, const std::string& name) {
  AnalogyTestset ts{name, {}};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    if (line.front() == ':') continue;  // section headers in the common analogy files
    auto f = split_ws(line);
    if (f.size() != 4) throw ParseError(name, lineno, "expected 'a a* b b*'");
    ts.items.push_back({lower(f[0]), lower(f[1]), lower(f[2]), lower(f[3])});
  }
  return ts;
}

ChoiceTestset read_choice(std::istream& in, const std::string& name) {
  ChoiceTestset ts{name, {}};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto p1 = line.find('|');
    const auto p2 = p1 == std::string::npos ? std::string::npos : line.find('|', p1 + 1);
    if (p2 == std::string::npos) throw ParseError(name, lineno, "expected 'probe | c1 c2 c3 c4 | answer'");
    auto probe = split_ws(std::string_view(line).substr(0, p1));
    auto cands = split_ws(std::string_view(line).substr(p1 + 1, p2 - p1 - 1));
    auto ans = split_ws(std::string_view(line).substr(p2 + 1));
    int answer = -1;
    if (probe.size() != 1 || cands.size() != 4 || ans.size() != 1)
      throw ParseError(name, lineno, "expected one probe, four candidates and one answer index");
    auto [ptr, ec] = std::from_chars(ans[0].data(), ans[0].data() + ans[0].size(), answer);
    if (ec != std::errc() || ptr != ans[0].data() + ans[0].size() || answer < 0 || answer > 3)
      throw ParseError(name, lineno, "answer index must be 0..3");
    ChoiceItem item;
    item.probe = lower(probe[0]);
    for (std::size_t k = 0; k < 4; ++k) item.candidates[k] = lower(cands[k]);
    item.answer = answer;
    ts.items.push_back(std::move(item));
  }
  return ts;
}

std::optional<TestsetKind> testset_kind(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".sim") return TestsetKind::Similarity;
  if (ext == ".analogy") return TestsetKind::Analogy;
  if (ext == ".choice") return TestsetKind::Choice;
  return std::nullopt;
}

EvalReport evaluate_file(const EmbeddingSet& set, const std::filesystem::path& path) {
  auto kind = testset_kind(path);
  if (!kind) throw DomainError("unrecognized testset extension: " + path.string());
  auto in = open_input(path);
  const auto name = path.stem().string();
  switch (*kind) {
    case TestsetKind::Similarity:
      return eval_similarity(set, read_similarity(in, name));
    case TestsetKind::Analogy:
      return eval_analogy_3cosmul(set, read_analogy(in, name));
    case TestsetKind::Choice:
      return eval_choice(set, read_choice(in, name));
  }
  throw DomainError("unreachable");
}

std::vector<std::filesystem::path> list_testsets(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && testset_kind(entry.path())) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string format_reports(const std::vector<EvalReport>& reports) {
  std::size_t width = 7;
  for (const auto& r : reports) width = std::max(width, r.testset.size());
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %-8s  %8s  %7s  %7s  %8s\n", static_cast<int>(width), "testset", "metric",
                "value", "covered", "total", "coverage");
  os << buf;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-*s  %-8s  %8.4f  %7zu  %7zu  %8.4f\n", static_cast<int>(width),
                  r.testset.c_str(), r.metric.c_str(), r.value, r.covered, r.total, r.coverage());
    os << buf;
  }
  auto fixed = [&buf](double x) {
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    os << r.testset << '.' << r.metric << '=' << fixed(r.value) << '\n';
    os << r.testset << ".covered=" << r.covered << '\n';
    os << r.testset << ".total=" << r.total << '\n';
    os << r.testset << ".coverage=" << fixed(r.coverage()) << '\n';
  }
  return os.str();
}

}  // namespace psdvec
