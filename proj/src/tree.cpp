#include "xdparse/tree.hpp"

#include <algorithm>
#include <stdexcept>

namespace xdparse {

ParseTree ParseTree::leaf(Word word) {
  if (word.form.empty() || word.tag.empty())
    throw std::invalid_argument("word form and tag must be non-empty");
  auto n = std::make_shared<Node>();
  n->label = word.tag;
  n->word = std::move(word);
  n->n_leaves = 1;
  return ParseTree(std::move(n));
}

ParseTree ParseTree::node(std::string label, std::vector<ParseTree> children) {
  if (label.empty()) throw std::invalid_argument("nonterminal label must be non-empty");
  if (children.empty())
    throw std::invalid_argument("nonterminal '" + label + "' has no children");
  auto n = std::make_shared<Node>();
  n->label = std::move(label);
  for (const auto& c : children) n->n_leaves += c.size();
  n->children = std::move(children);
  return ParseTree(std::move(n));
}

const std::string& ParseTree::label() const { return node_->label; }

const Word& ParseTree::word() const {
  if (!node_->word) throw std::logic_error("word() called on an internal node");
  return *node_->word;
}

bool operator==(const ParseTree& a, const ParseTree& b) {
  if (a.node_ == b.node_) return true;
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return a.word() == b.word();
  if (a.label() != b.label()) return false;
  auto ac = a.children();
  auto bc = b.children();
  return std::equal(ac.begin(), ac.end(), bc.begin(), bc.end());
}

namespace {

void collect_leaves(const ParseTree& t, std::vector<Word>& out) {
  if (t.is_leaf()) {
    out.push_back(t.word());
    return;
  }
  for (const auto& c : t.children()) collect_leaves(c, out);
}

int collect_spans(const ParseTree& t, int start, std::vector<Span>& out) {
  if (t.is_leaf()) return start + 1;
  std::size_t slot = out.size();
  out.push_back(Span{t.label(), start, start});
  int end = start;
  for (const auto& c : t.children()) end = collect_spans(c, end, out);
  out[slot].end = end;
  return end;
}

void check_label(const std::string& label) {
  if (label.find(kUnarySeparator) != std::string::npos)
    throw std::invalid_argument("label '" + label + "' contains the reserved unary separator '" +
                                std::string(1, kUnarySeparator) + "'");
}

int chain_depth(const ParseTree& t, int& best) {
  if (t.is_leaf()) return 0;
  int depth = 1;
  if (t.children().size() == 1) {
    depth = chain_depth(t.children()[0], best) + 1;
  } else {
    for (const auto& c : t.children()) chain_depth(c, best);
  }
  best = std::max(best, depth);
  return depth;
}

}  // namespace

std::vector<Word> leaves(const ParseTree& tree) {
  std::vector<Word> out;
  out.reserve(tree.size());
  collect_leaves(tree, out);
  return out;
}

std::vector<Span> spans_of(const ParseTree& tree) {
  std::vector<Span> out;
  collect_spans(tree, 0, out);
  return out;
}

ParseTree collapse_unaries(const ParseTree& tree) {
  if (tree.is_leaf()) return tree;
  std::vector<std::string> chain;
  const ParseTree* cur = &tree;
  for (;;) {
    check_label(cur->label());
    chain.push_back(cur->label());
    if (cur->children().size() == 1 && !cur->children()[0].is_leaf())
      cur = &cur->children()[0];
    else
      break;
  }
  std::vector<ParseTree> kids;
  kids.reserve(cur->children().size());
  for (const auto& c : cur->children()) kids.push_back(collapse_unaries(c));
  return ParseTree::node(join_collapsed(chain), std::move(kids));
}

ParseTree expand_unaries(const ParseTree& tree) {
  if (tree.is_leaf()) return tree;
  std::vector<ParseTree> kids;
  kids.reserve(tree.children().size());
  for (const auto& c : tree.children()) kids.push_back(expand_unaries(c));
  auto parts = split_collapsed(tree.label());
  ParseTree out = ParseTree::node(parts.back(), std::move(kids));
  for (auto it = parts.rbegin() + 1; it != parts.rend(); ++it)
    out = ParseTree::node(*it, {out});
  return out;
}

std::string join_collapsed(std::span<const std::string> parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += kUnarySeparator;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split_collapsed(std::string_view label) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  for (;;) {
    std::size_t next = label.find(kUnarySeparator, pos);
    parts.emplace_back(label.substr(pos, next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  for (const auto& p : parts)
    if (p.empty()) throw std::invalid_argument("malformed collapsed label '" + std::string(label) + "'");
  return parts;
}

int max_unary_chain(const ParseTree& tree) {
  int best = 0;
  chain_depth(tree, best);
  return best;
}

bool well_nested(std::span<const Span> spans) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (std::size_t j = i + 1; j < spans.size(); ++j) {
      const Span& a = spans[i];
      const Span& b = spans[j];
      bool disjoint = a.end <= b.start || b.end <= a.start;
      bool a_in_b = b.start <= a.start && a.end <= b.end;
      bool b_in_a = a.start <= b.start && b.end <= a.end;
      if (!(disjoint || a_in_b || b_in_a)) return false;
    }
  }
  return true;
}

bool well_formed(const ParseTree& tree, std::span<const Word> sentence) {
  auto ws = leaves(tree);
  if (!std::equal(ws.begin(), ws.end(), sentence.begin(), sentence.end())) return false;
  auto spans = spans_of(tree);
  for (const auto& s : spans)
    if (s.start < 0 || s.start >= s.end || s.end > static_cast<int>(sentence.size())) return false;
  return well_nested(spans);
}

}  // namespace xdparse
