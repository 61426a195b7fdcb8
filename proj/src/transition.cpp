#include "xdparse/transition.hpp"

namespace xdparse {

std::string Action::to_string() const {
  switch (kind) {
    case Kind::Shift: return "SHIFT";
    case Kind::Project: return "PJ(" + label + ")";
    case Kind::Reduce: return "REDUCE";
    case Kind::Finish: return "FINISH";
  }
  return {};
}

Action Action::parse(std::string_view text) {
  if (text == "SHIFT") return shift();
  if (text == "REDUCE") return reduce();
  if (text == "FINISH") return finish();
  if (text.size() > 4 && text.substr(0, 3) == "PJ(" && text.back() == ')')
    return project(std::string(text.substr(3, text.size() - 4)));
  throw std::invalid_argument("unknown action '" + std::string(text) + "'");
}

ActionVocab::ActionVocab(std::vector<std::string> nonterminals) : nonterminals_(std::move(nonterminals)) {
  for (const auto& nt : nonterminals_) {
    if (project_index_.count(nt)) throw std::invalid_argument("duplicate nonterminal '" + nt + "'");
    project_index_[nt] = actions_.size();
    actions_.push_back(Action::project(nt));
  }
}

std::optional<std::size_t> ActionVocab::index_of(const Action& a) const {
  switch (a.kind) {
    case Action::Kind::Shift: return kShift;
    case Action::Kind::Reduce: return kReduce;
    case Action::Kind::Finish: return kFinish;
    case Action::Kind::Project:
      if (auto it = project_index_.find(a.label); it != project_index_.end()) return it->second;
      return std::nullopt;
  }
  return std::nullopt;
}

ParserState::ParserState(std::shared_ptr<const std::vector<Word>> sentence) : sentence_(std::move(sentence)) {
  stack_.reserve(2 * sentence_->size() + 2);
}

const std::string* ParserState::open_label() const {
  if (open_positions_.empty()) return nullptr;
  return &stack_[open_positions_.back()].open_label;
}

int ParserState::top_chain() const {
  if (stack_.empty()) return 0;
  if (stack_.back().is_open()) return stack_[stack_.size() - 2].chain;
  return stack_.back().chain;
}

std::optional<std::string> ParserState::violation(const Action& a, int unary_limit) const {
  if (finished_) return "derivation already finished";
  bool top_completed = !stack_.empty() && !stack_.back().is_open();
  switch (a.kind) {
    case Action::Kind::Shift:
      if (buffer_empty()) return "SHIFT requires a non-empty buffer";
      if (!stack_.empty() && open_positions_.empty())
        return "SHIFT requires an empty stack or an open nonterminal";
      return std::nullopt;
    case Action::Kind::Project:
      if (a.label.empty()) return "PJ requires a label";
      if (!top_completed) return "PJ requires a completed subtree on top of the stack";
      if (buffer_empty() && stack_.back().chain >= unary_limit)
        return "PJ would exceed the unary chain limit of " + std::to_string(unary_limit);
      return std::nullopt;
    case Action::Kind::Reduce:
      if (open_positions_.empty()) return "REDUCE requires an open nonterminal";
      if (!top_completed && stack_[stack_.size() - 2].chain >= unary_limit)
        return "REDUCE would exceed the unary chain limit of " + std::to_string(unary_limit);
      return std::nullopt;
    case Action::Kind::Finish:
      if (!buffer_empty()) return "FINISH requires an empty buffer";
      if (!open_positions_.empty()) return "FINISH requires no open nonterminals";
      if (stack_.size() != 1) return "FINISH requires exactly one item on the stack";
      if (stack_.back().tree->is_leaf()) return "FINISH requires a phrasal root, not a bare word";
      return std::nullopt;
  }
  return "unknown action";
}

void ParserState::apply(const Action& a, int unary_limit) {
  if (auto why = violation(a, unary_limit)) throw IllegalAction(a.to_string() + ": " + *why);
  switch (a.kind) {
    case Action::Kind::Shift: {
      const Word& w = (*sentence_)[buffer_front_++];
      stack_.push_back(StackItem{ParseTree::leaf(w), {}, 0});
      break;
    }
    case Action::Kind::Project:
      open_positions_.push_back(stack_.size());
      stack_.push_back(StackItem{std::nullopt, a.label, 0});
      break;
    case Action::Kind::Reduce:
      reduce();
      break;
    case Action::Kind::Finish:
      finished_ = true;
      break;
  }
  last_action_ = a;
}

void ParserState::reduce() {
  std::size_t marker = open_positions_.back();
  open_positions_.pop_back();
  std::size_t first = marker - 1;
  std::vector<ParseTree> kids;
  kids.reserve(stack_.size() - marker);
  kids.push_back(*stack_[first].tree);
  for (std::size_t i = marker + 1; i < stack_.size(); ++i) kids.push_back(*stack_[i].tree);
  int chain = kids.size() == 1 ? stack_[first].chain + 1 : 1;
  StackItem item{ParseTree::node(stack_[marker].open_label, std::move(kids)), {}, chain};
  stack_.resize(first);
  stack_.push_back(std::move(item));
}

ParseTree ParserState::result() const {
  if (!finished_) throw std::logic_error("result() on an unfinished derivation");
  return *stack_.back().tree;
}

std::vector<std::size_t> legal_action_indices(const ParserState& state, const ActionVocab& vocab, int unary_limit) {
  std::vector<std::size_t> out;
  if (state.is_legal(Action::shift(), unary_limit)) out.push_back(ActionVocab::kShift);
  if (state.is_legal(Action::reduce(), unary_limit)) out.push_back(ActionVocab::kReduce);
  if (state.is_legal(Action::finish(), unary_limit)) out.push_back(ActionVocab::kFinish);
  // All PJ actions share one precondition.
  if (vocab.size() > ActionVocab::kFirstProject && state.is_legal(vocab[ActionVocab::kFirstProject], unary_limit))
    for (std::size_t i = ActionVocab::kFirstProject; i < vocab.size(); ++i) out.push_back(i);
  return out;
}

std::vector<Action> legal_actions(const ParserState& state, const ActionVocab& vocab, int unary_limit) {
  std::vector<Action> out;
  for (auto i : legal_action_indices(state, vocab, unary_limit)) out.push_back(vocab[i]);
  return out;
}

namespace {

void oracle_rec(const ParseTree& t, std::vector<Action>& out) {
  if (t.is_leaf()) {
    out.push_back(Action::shift());
    return;
  }
  auto kids = t.children();
  oracle_rec(kids[0], out);
  out.push_back(Action::project(t.label()));
  for (std::size_t i = 1; i < kids.size(); ++i) oracle_rec(kids[i], out);
  out.push_back(Action::reduce());
}

}  // namespace

std::vector<Action> oracle_actions(const ParseTree& tree) {
  if (tree.is_leaf()) throw std::invalid_argument("oracle_actions needs a phrasal root");
  std::vector<Action> out;
  out.reserve(3 * tree.size() + 1);
  oracle_rec(tree, out);
  out.push_back(Action::finish());
  return out;
}

ParseTree execute(std::span<const Action> actions, std::span<const Word> sentence, int unary_limit) {
  ParserState state(std::vector<Word>(sentence.begin(), sentence.end()));
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (auto why = state.violation(actions[i], unary_limit))
      throw IllegalAction("step " + std::to_string(i) + " (" + actions[i].to_string() + "): " + *why);
    state.apply(actions[i], unary_limit);
  }
  if (!state.finished()) throw IllegalAction("action sequence ends before FINISH");
  return state.result();
}

std::string format_actions(std::span<const Action> actions) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out += ' ';
    out += actions[i].to_string();
  }
  return out;
}

}  // namespace xdparse
