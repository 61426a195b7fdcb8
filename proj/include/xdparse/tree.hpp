#pragma once

#include <compare>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xdparse {

/// A surface token together with its part-of-speech tag. Tags are input
/// data (gold or from an external tagger); nothing in this library predicts
/// them.
struct Word {
  std::string form;
  std::string tag;

  friend bool operator==(const Word&, const Word&) = default;
};

/// Labeled n-ary constituency tree.
///
/// A leaf carries a Word (the preterminal tag lives on the word), an internal
/// node carries a nonterminal label and at least one child. Nodes are
/// immutable and shared, so copying a tree is O(1) and trees may be read from
/// any number of threads.
class ParseTree {
 public:
  static ParseTree leaf(Word word);
  static ParseTree node(std::string label, std::vector<ParseTree> children);

  bool is_leaf() const { return node_->word.has_value(); }

  /// Nonterminal label, or the tag for a leaf.
  const std::string& label() const;
  const Word& word() const;
  std::span<const ParseTree> children() const { return node_->children; }

  /// Number of leaves below this node.
  std::size_t size() const { return node_->n_leaves; }

  friend bool operator==(const ParseTree& a, const ParseTree& b);

 private:
  struct Node {
    std::string label;
    std::optional<Word> word;
    std::vector<ParseTree> children;
    std::size_t n_leaves = 0;
  };

  explicit ParseTree(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

/// A labeled bracket over word positions [start, end).
struct Span {
  std::string label;
  int start = 0;
  int end = 0;

  int length() const { return end - start; }

  friend auto operator<=>(const Span&, const Span&) = default;
  friend bool operator==(const Span&, const Span&) = default;
};

inline constexpr char kUnarySeparator = '+';

std::vector<Word> leaves(const ParseTree& tree);

/// One span per internal node, in preorder. Leaves (words with their tags)
/// are never spans. Unary chains produce one span per chain member.
std::vector<Span> spans_of(const ParseTree& tree);

/// Merges every maximal chain of single-child nonterminals into one node
/// whose label joins the chain members with kUnarySeparator, outermost first.
/// Throws std::invalid_argument if a label already contains the separator.
ParseTree collapse_unaries(const ParseTree& tree);

/// Inverse of collapse_unaries.
ParseTree expand_unaries(const ParseTree& tree);

std::string join_collapsed(std::span<const std::string> parts);
std::vector<std::string> split_collapsed(std::string_view label);

/// Depth of the longest chain of nested single-child nonterminals. A branching
/// node counts as a chain of one; a bare leaf has depth zero.
int max_unary_chain(const ParseTree& tree);

/// True when every pair of spans is nested or disjoint.
bool well_nested(std::span<const Span> spans);

/// True when leaves(tree) equals sentence and the spans are well nested.
bool well_formed(const ParseTree& tree, std::span<const Word> sentence);

}  // namespace xdparse
