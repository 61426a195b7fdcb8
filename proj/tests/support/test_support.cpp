#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "xdparse/transition.hpp"

namespace xdparse::testing {

namespace {

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

// Random subtree over words[i, j) whose unary chain depth is at most `chain`.
ParseTree random_over(Rng& rng, const std::vector<Word>& words, int i, int j, int chain,
                      const RandomTreeOptions& opt) {
  const std::string& label = pick(rng, opt.labels);
  if (chain > 1 && rng.uniform() < opt.unary_probability)
    return ParseTree::node(label, {random_over(rng, words, i, j, chain - 1, opt)});
  if (j - i == 1) return ParseTree::node(label, {ParseTree::leaf(words[i])});

  int max_parts = std::min(opt.max_children, j - i);
  int parts = 2 + static_cast<int>(rng.below(static_cast<std::size_t>(max_parts - 1)));
  std::vector<int> cuts;
  for (int k = i + 1; k < j; ++k) cuts.push_back(k);
  rng.shuffle(cuts);
  cuts.resize(parts - 1);
  std::sort(cuts.begin(), cuts.end());
  cuts.insert(cuts.begin(), i);
  cuts.push_back(j);

  std::vector<ParseTree> kids;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    int a = cuts[p], b = cuts[p + 1];
    if (b - a == 1 && rng.uniform() < 0.5)
      kids.push_back(ParseTree::leaf(words[a]));
    else
      kids.push_back(random_over(rng, words, a, b, opt.max_chain, opt));
  }
  return ParseTree::node(label, std::move(kids));
}

ParseTree perturb(Rng& rng, const ParseTree& t, const std::vector<Word>& words, int offset,
                  const RandomTreeOptions& opt) {
  if (t.is_leaf()) return t;
  double u = rng.uniform();
  if (u < 0.2) return random_over(rng, words, offset, offset + static_cast<int>(t.size()), opt.max_chain, opt);
  std::string label = u < 0.35 ? pick(rng, opt.labels) : t.label();
  std::vector<ParseTree> kids;
  int pos = offset;
  for (const auto& c : t.children()) {
    kids.push_back(perturb(rng, c, words, pos, opt));
    pos += static_cast<int>(c.size());
  }
  return ParseTree::node(label, std::move(kids));
}

ParseTree leaf(const std::string& form, const std::string& tag) { return ParseTree::leaf(Word{form, tag}); }

const std::vector<std::string> kDeterminers = {"the", "a", "every", "some"};
const std::vector<std::string> kNouns = {"dog", "cat", "park", "telescope", "man", "garden", "bird", "child"};
const std::vector<std::string> kPrepositions = {"in", "with", "near", "under"};
const std::vector<std::string> kVerbs = {"sees", "likes", "chases", "finds"};

ParseTree toy_np(Rng& rng, int depth) {
  std::vector<ParseTree> kids = {leaf(pick(rng, kDeterminers), "DT"), leaf(pick(rng, kNouns), "NN")};
  if (depth < 2 && rng.uniform() < 0.4) {
    kids.push_back(ParseTree::node("PP", {leaf(pick(rng, kPrepositions), "IN"), toy_np(rng, depth + 1)}));
  }
  return ParseTree::node("NP", std::move(kids));
}

}  // namespace

std::vector<Word> random_sentence(Rng& rng, int n) {
  RandomTreeOptions opt;
  std::vector<Word> words;
  for (int i = 0; i < n; ++i) words.push_back({pick(rng, opt.forms), pick(rng, opt.tags)});
  return words;
}

ParseTree random_tree(Rng& rng, int n_words, const RandomTreeOptions& options, const std::string& root_label) {
  std::vector<Word> words;
  for (int i = 0; i < n_words; ++i) words.push_back({pick(rng, options.forms), pick(rng, options.tags)});
  ParseTree t = random_over(rng, words, 0, n_words, options.max_chain, options);
  return root_label.empty() ? t : ParseTree::node(root_label, {t});
}

ParseTree perturb_tree(Rng& rng, const ParseTree& gold, const RandomTreeOptions& options) {
  return perturb(rng, gold, leaves(gold), 0, options);
}

ParseTree sample_toy_tree(Rng& rng) {
  ParseTree vp = ParseTree::node("VP", {leaf(pick(rng, kVerbs), "VBZ"), toy_np(rng, 0)});
  return ParseTree::node("TOP", {ParseTree::node("S", {toy_np(rng, 0), vp})});
}

std::vector<ParseTree> toy_corpus(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<ParseTree> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_toy_tree(rng));
  return out;
}

ParseTree sample_ambiguous_tree(Rng& rng) {
  std::vector<ParseTree> vp = {leaf(pick(rng, kVerbs), "VBZ"), toy_np(rng, 0)};
  if (rng.uniform() < 0.35)
    vp.push_back(ParseTree::node("PP", {leaf(pick(rng, kPrepositions), "IN"), toy_np(rng, 1)}));
  return ParseTree::node("TOP", {ParseTree::node("S", {toy_np(rng, 0), ParseTree::node("VP", std::move(vp))})});
}

std::vector<ParseTree> ambiguous_corpus(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<ParseTree> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_ambiguous_tree(rng));
  return out;
}

ParseTree rename_labels(const ParseTree& tree, const std::map<std::string, std::string>& renames) {
  if (tree.is_leaf()) return tree;
  std::vector<ParseTree> kids;
  for (const auto& c : tree.children()) kids.push_back(rename_labels(c, renames));
  auto it = renames.find(tree.label());
  return ParseTree::node(it == renames.end() ? tree.label() : it->second, std::move(kids));
}

BracketCounts brute_force_counts(const ParseTree& gold, const ParseTree& pred, const EvalConfig& config,
                                 int min_length) {
  struct Bracket {
    std::string label;
    int start;
    int end;
  };
  auto extract = [&](const ParseTree& tree) {
    // Position of every word after punctuation deletion.
    auto words = leaves(tree);
    std::vector<int> kept_before(words.size() + 1, 0);
    for (std::size_t i = 0; i < words.size(); ++i)
      kept_before[i + 1] = kept_before[i] + (config.deleted_tags.count(words[i].tag) ? 0 : 1);

    std::vector<Bracket> out;
    std::function<void(const ParseTree&, int)> walk = [&](const ParseTree& t, int first_word) {
      if (t.is_leaf()) return;
      int last_word = first_word + static_cast<int>(t.size());
      std::string label = t.label();
      if (config.label_equivalence.count(label)) label = config.label_equivalence.at(label);
      int start = kept_before[first_word];
      int end = kept_before[last_word];
      if (!config.deleted_labels.count(label) && end > start && end - start >= min_length)
        out.push_back({label, start, end});
      int pos = first_word;
      for (const auto& c : t.children()) {
        walk(c, pos);
        pos += static_cast<int>(c.size());
      }
    };
    walk(tree, 0);
    return out;
  };

  auto g = extract(gold);
  auto p = extract(pred);
  BracketCounts counts;
  counts.gold = static_cast<long>(g.size());
  counts.predicted = static_cast<long>(p.size());
  std::vector<bool> used(p.size(), false);
  for (const auto& gb : g) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!used[k] && p[k].label == gb.label && p[k].start == gb.start && p[k].end == gb.end) {
        used[k] = true;
        ++counts.matched;
        break;
      }
    }
  }
  counts.identical = counts.matched == counts.gold && counts.matched == counts.predicted;
  return counts;
}

namespace {

struct Candidate {
  double score;
  std::vector<std::pair<std::pair<int, int>, std::size_t>> labelled;  // ((start, end), label)
};

// All binary bracketings of [i, j) as lists of spans (every span of the
// bracketing, including the single words).
std::vector<std::vector<std::pair<int, int>>> bracketings(int i, int j) {
  if (j - i == 1) return {{{i, j}}};
  std::vector<std::vector<std::pair<int, int>>> out;
  for (int k = i + 1; k < j; ++k)
    for (const auto& l : bracketings(i, k))
      for (const auto& r : bracketings(k, j)) {
        std::vector<std::pair<int, int>> b = {{i, j}};
        b.insert(b.end(), l.begin(), l.end());
        b.insert(b.end(), r.begin(), r.end());
        out.push_back(std::move(b));
      }
  return out;
}

// Score of a labelled bracketing, summed as label(i, j) + (left + right).
double tree_score(const SpanScoreGrid& grid, const std::map<std::pair<int, int>, std::size_t>& labels,
                  const std::map<std::pair<int, int>, int>& split, int i, int j) {
  double own = grid.at(i, j, labels.at({i, j}));
  if (j - i == 1) return own;
  int k = split.at({i, j});
  return own + (tree_score(grid, labels, split, i, k) + tree_score(grid, labels, split, k, j));
}

void build_tree(const SpanScoreGrid& grid, const std::map<std::pair<int, int>, std::size_t>& labels,
                const std::map<std::pair<int, int>, int>& split, std::span<const Word> sentence, int i, int j,
                std::vector<ParseTree>& out) {
  std::vector<ParseTree> kids;
  if (j - i == 1) {
    kids.push_back(ParseTree::leaf(sentence[i]));
  } else {
    int k = split.at({i, j});
    build_tree(grid, labels, split, sentence, i, k, kids);
    build_tree(grid, labels, split, sentence, k, j, kids);
  }
  std::size_t lab = labels.at({i, j});
  if (lab == 0)
    out.insert(out.end(), kids.begin(), kids.end());
  else
    out.push_back(ParseTree::node(grid.labels()[lab], std::move(kids)));
}

}  // namespace

BruteForceParse brute_force_cky(const SpanScoreGrid& grid, std::span<const Word> sentence, bool all_labelings) {
  const int n = grid.n();
  const std::size_t L = grid.n_labels();
  BruteForceParse best{-std::numeric_limits<double>::infinity(), ParseTree::leaf(Word{"_", "_"})};
  bool found = false;

  for (const auto& spans : bracketings(0, n)) {
    std::map<std::pair<int, int>, int> split;
    // The first span listed for a bracketing is its root; a span's split is
    // the end of the next span that starts at the same position.
    for (std::size_t a = 0; a < spans.size(); ++a) {
      auto [i, j] = spans[a];
      if (j - i == 1) continue;
      split[{i, j}] = spans[a + 1].second;
    }

    auto consider = [&](const std::map<std::pair<int, int>, std::size_t>& labels) {
      double s = tree_score(grid, labels, split, 0, n);
      if (!found || s > best.score) {
        std::vector<ParseTree> root;
        build_tree(grid, labels, split, sentence, 0, n, root);
        best = {s, expand_unaries(root.front())};
        found = true;
      }
    };

    std::map<std::pair<int, int>, std::size_t> labels;
    if (all_labelings) {
      // Odometer over every label assignment.
      std::vector<std::size_t> digit(spans.size(), 0);
      digit[0] = 1;
      while (true) {
        for (std::size_t a = 0; a < spans.size(); ++a) labels[spans[a]] = digit[a];
        consider(labels);
        std::size_t a = 0;
        while (a < spans.size()) {
          if (++digit[a] < L) break;
          digit[a] = a == 0 ? 1 : 0;
          ++a;
        }
        if (a == spans.size()) break;
      }
    } else {
      for (const auto& sp : spans) {
        std::size_t first = sp == std::make_pair(0, n) ? 1 : 0;
        std::size_t lab = first;
        for (std::size_t l = first + 1; l < L; ++l)
          if (grid.at(sp.first, sp.second, l) > grid.at(sp.first, sp.second, lab)) lab = l;
        labels[sp] = lab;
      }
      consider(labels);
    }
  }
  return best;
}

SpanScoreGrid random_grid(Rng& rng, int n, std::size_t n_labels) {
  std::vector<std::string> labels = {""};
  const std::vector<std::string> pool = {"A", "B", "C+D", "E"};
  for (std::size_t l = 1; l < n_labels; ++l) labels.push_back(pool[l - 1]);
  SpanScoreGrid grid(n, labels);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j <= n; ++j)
      for (std::size_t l = 0; l < n_labels; ++l) grid.at(i, j, l) = rng.normal() * 2.0;
  return grid;
}

InOrderModel random_inorder_model(Rng& rng, std::vector<std::string> nonterminals, int hash_bits, double scale) {
  InOrderModel m;
  m.actions = ActionVocab(std::move(nonterminals));
  m.scorer = LinearScorer(m.actions.size(), hash_bits);
  for (std::uint32_t f = 0; f < (1u << hash_bits); ++f) {
    std::vector<float> row(m.actions.size());
    for (float& w : row) w = static_cast<float>(rng.normal() * scale);
    m.scorer.set_row(f, std::move(row));
  }
  return m;
}

}  // namespace xdparse::testing
