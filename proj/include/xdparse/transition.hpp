#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xdparse/tree.hpp"

namespace xdparse {

/// In-order transition system: a node's first child is built, then the node
/// is projected (PJ), then the remaining children are built, then REDUCE
/// closes it.
struct Action {
  enum class Kind : std::uint8_t { Shift, Project, Reduce, Finish };

  Kind kind = Kind::Shift;
  std::string label;  // Project only

  static Action shift() { return {Kind::Shift, {}}; }
  static Action project(std::string label) { return {Kind::Project, std::move(label)}; }
  static Action reduce() { return {Kind::Reduce, {}}; }
  static Action finish() { return {Kind::Finish, {}}; }

  /// "SHIFT", "PJ(NP)", "REDUCE", "FINISH".
  std::string to_string() const;
  static Action parse(std::string_view text);

  friend auto operator<=>(const Action&, const Action&) = default;
  friend bool operator==(const Action&, const Action&) = default;
};

/// Fixed action inventory: SHIFT, REDUCE, FINISH, then one PJ per nonterminal.
class ActionVocab {
 public:
  static constexpr std::size_t kShift = 0;
  static constexpr std::size_t kReduce = 1;
  static constexpr std::size_t kFinish = 2;
  static constexpr std::size_t kFirstProject = 3;

  ActionVocab() = default;
  explicit ActionVocab(std::vector<std::string> nonterminals);

  std::size_t size() const { return kFirstProject + nonterminals_.size(); }
  const Action& operator[](std::size_t i) const { return actions_[i]; }
  std::optional<std::size_t> index_of(const Action& a) const;
  const std::vector<std::string>& nonterminals() const { return nonterminals_; }

 private:
  std::vector<std::string> nonterminals_;
  std::vector<Action> actions_ = {Action::shift(), Action::reduce(), Action::finish()};
  std::map<std::string, std::size_t> project_index_;
};

/// A stack entry: either a completed subtree or an open-nonterminal marker.
/// The marker sits directly above its (completed) first child.
struct StackItem {
  std::optional<ParseTree> tree;
  std::string open_label;
  /// Unary-chain depth of a completed item: 0 for a word, 1 for a branching
  /// node, child depth + 1 for a single-child node.
  int chain = 0;

  bool is_open() const { return !tree.has_value(); }
};

class IllegalAction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParserState {
 public:
  explicit ParserState(std::shared_ptr<const std::vector<Word>> sentence);
  explicit ParserState(std::vector<Word> sentence)
      : ParserState(std::make_shared<const std::vector<Word>>(std::move(sentence))) {}

  const std::vector<Word>& sentence() const { return *sentence_; }
  std::span<const StackItem> stack() const { return stack_; }
  std::size_t buffer_front() const { return buffer_front_; }
  bool buffer_empty() const { return buffer_front_ >= sentence_->size(); }
  int open_count() const { return static_cast<int>(open_positions_.size()); }
  const std::optional<Action>& last_action() const { return last_action_; }
  bool finished() const { return finished_; }

  /// Label of the innermost open nonterminal, if any.
  const std::string* open_label() const;
  /// Unary-chain depth of the completed top item (or of the first child when
  /// the top is an open marker); 0 for an empty stack.
  int top_chain() const;

  /// Reason the action cannot be applied, or nullopt when it is legal.
  std::optional<std::string> violation(const Action& a, int unary_limit) const;
  bool is_legal(const Action& a, int unary_limit) const { return !violation(a, unary_limit); }

  /// Applies a legal action; throws IllegalAction otherwise.
  void apply(const Action& a, int unary_limit);

  /// The completed tree of a finished state.
  ParseTree result() const;

 private:
  void reduce();

  std::shared_ptr<const std::vector<Word>> sentence_;
  std::vector<StackItem> stack_;
  std::vector<std::size_t> open_positions_;
  std::size_t buffer_front_ = 0;
  std::optional<Action> last_action_;
  bool finished_ = false;
};

/// Indices into vocab of the actions legal in state.
std::vector<std::size_t> legal_action_indices(const ParserState& state, const ActionVocab& vocab, int unary_limit);
std::vector<Action> legal_actions(const ParserState& state, const ActionVocab& vocab, int unary_limit);

/// Static oracle: SHIFT for a word; for a node X with children c1..ck,
/// oracle(c1) PJ(X) oracle(c2) ... oracle(ck) REDUCE; then FINISH.
/// Throws std::invalid_argument for a tree that is a bare word.
std::vector<Action> oracle_actions(const ParseTree& tree);

/// Runs actions from the initial state; throws IllegalAction naming the
/// 0-based step and the violated precondition.
ParseTree execute(std::span<const Action> actions, std::span<const Word> sentence, int unary_limit);

/// Action-sequence dump line: space-separated action names.
std::string format_actions(std::span<const Action> actions);

}  // namespace xdparse
