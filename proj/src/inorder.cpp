#include "xdparse/inorder.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "xdparse/binary_io.hpp"
#include "xdparse/eval.hpp"
#include "xdparse/features.hpp"

namespace xdparse {

namespace {

constexpr char kModelMagic[5] = "XDPM";
constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint8_t kInOrderKind = 'I';

std::vector<std::span<const float>> state_slots(const ParserState& state, const Matrix* vectors) {
  if (!vectors) return {};
  if (state.buffer_empty()) return {std::span<const float>{}};
  return {vectors->row(state.buffer_front())};
}

void check_vectors(const LinearScorer& scorer, const Matrix* vectors, std::size_t n) {
  if (!scorer.has_projection()) return;
  if (!vectors) throw std::invalid_argument("model uses imported vectors but none were supplied");
  if (vectors->rows != n) throw std::invalid_argument("vector rows do not match sentence length");
  if (vectors->cols != scorer.projection()->dim_in())
    throw std::invalid_argument("vector dimension does not match the model's projection");
}

struct Hypothesis {
  ParserState state;
  double score = 0.0;
  std::vector<std::size_t> actions;
};

InOrderParse finish_hypothesis(const Hypothesis& h, const InOrderModel& model) {
  InOrderParse out{h.state.result(), h.score, {}, false};
  for (auto a : h.actions) out.actions.push_back(model.actions[a]);
  return out;
}

// Closes all open nonterminals, attaches any unshifted words, and wraps the
// result under the root label.
InOrderParse force_complete(const Hypothesis& h, const InOrderModel& model) {
  ParserState state = h.state;
  InOrderParse out{ParseTree::leaf(Word{"_", "_"}), h.score, {}, true};
  for (auto a : h.actions) out.actions.push_back(model.actions[a]);
  while (state.open_count() > 0) {
    state.apply(Action::reduce(), INT_MAX);
    out.actions.push_back(Action::reduce());
  }
  std::vector<ParseTree> kids;
  for (const auto& item : state.stack()) kids.push_back(*item.tree);
  for (std::size_t i = state.buffer_front(); i < state.sentence().size(); ++i) {
    kids.push_back(ParseTree::leaf(state.sentence()[i]));
    out.actions.push_back(Action::shift());
  }
  out.tree = ParseTree::node(model.root_label, std::move(kids));
  out.actions.push_back(Action::project(model.root_label));
  out.actions.push_back(Action::reduce());
  out.actions.push_back(Action::finish());
  return out;
}

}  // namespace

std::size_t action_cap(std::size_t n_words) { return 12 * n_words + 24; }

std::vector<double> action_log_probs(const ParserState& state, const InOrderModel& model, const Matrix* vectors,
                                     std::vector<std::size_t>& legal) {
  legal = legal_action_indices(state, model.actions, model.unary_limit);
  auto fv = featurize_state(state, model.scorer.hash_bits());
  auto fwd = model.scorer.forward(fv, state_slots(state, model.scorer.has_projection() ? vectors : nullptr));
  return log_softmax(fwd.scores, legal);
}

InOrderParse beam_decode(std::span<const Word> sentence, const InOrderModel& model, int beam_size,
                         const Matrix* vectors) {
  if (beam_size < 1) throw std::invalid_argument("beam size must be >= 1");
  if (sentence.empty()) throw std::invalid_argument("cannot parse an empty sentence");
  check_vectors(model.scorer, vectors, sentence.size());
  const std::size_t k = static_cast<std::size_t>(beam_size);

  auto words = std::make_shared<const std::vector<Word>>(sentence.begin(), sentence.end());
  std::vector<Hypothesis> beam;
  beam.push_back({ParserState(words), 0.0, {}});
  std::vector<Hypothesis> pool;

  struct Candidate {
    std::size_t hyp;
    std::size_t action;
    double score;
  };
  std::vector<Candidate> cands;
  std::vector<std::size_t> legal;

  double best_finished = -std::numeric_limits<double>::infinity();
  // Scores only fall as actions are added, so once the pool is full a live
  // item that trails the best finished derivation can never overtake it.
  auto done = [&] { return pool.size() >= k && beam.front().score <= best_finished; };

  const std::size_t cap = action_cap(sentence.size());
  for (std::size_t step = 0; step < cap && !beam.empty() && !done(); ++step) {
    cands.clear();
    for (std::size_t h = 0; h < beam.size(); ++h) {
      auto lp = action_log_probs(beam[h].state, model, vectors, legal);
      for (auto a : legal) cands.push_back({h, a, beam[h].score + lp[a]});
    }
    // Stable: ties keep hypothesis order, then action index order.
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
    if (cands.size() > k) cands.resize(k);

    std::vector<Hypothesis> next;
    next.reserve(cands.size());
    for (const auto& c : cands) {
      Hypothesis h = beam[c.hyp];
      h.state.apply(model.actions[c.action], model.unary_limit);
      h.score = c.score;
      h.actions.push_back(c.action);
      if (c.action == ActionVocab::kFinish) {
        best_finished = std::max(best_finished, h.score);
        pool.push_back(std::move(h));
      }
      else
        next.push_back(std::move(h));
    }
    beam = std::move(next);
  }

  if (!pool.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i)
      if (pool[i].score > pool[best].score) best = i;
    return finish_hypothesis(pool[best], model);
  }
  if (beam.empty()) throw std::logic_error("beam search ended with no hypotheses");
  return force_complete(beam.front(), model);
}

InOrderParse greedy_decode(std::span<const Word> sentence, const InOrderModel& model, const Matrix* vectors) {
  if (sentence.empty()) throw std::invalid_argument("cannot parse an empty sentence");
  check_vectors(model.scorer, vectors, sentence.size());
  Hypothesis h{ParserState(std::vector<Word>(sentence.begin(), sentence.end())), 0.0, {}};
  std::vector<std::size_t> legal;
  const std::size_t cap = action_cap(sentence.size());
  while (!h.state.finished()) {
    if (h.actions.size() >= cap) return force_complete(h, model);
    auto lp = action_log_probs(h.state, model, vectors, legal);
    std::size_t best = legal.front();
    for (auto a : legal)
      if (lp[a] > lp[best]) best = a;
    h.state.apply(model.actions[best], model.unary_limit);
    h.score += lp[best];
    h.actions.push_back(best);
  }
  return finish_hypothesis(h, model);
}

double derivation_score(std::span<const Action> actions, std::span<const Word> sentence, const InOrderModel& model,
                        const Matrix* vectors) {
  check_vectors(model.scorer, vectors, sentence.size());
  ParserState state(std::vector<Word>(sentence.begin(), sentence.end()));
  std::vector<std::size_t> legal;
  double total = 0.0;
  for (const auto& a : actions) {
    auto idx = model.actions.index_of(a);
    if (!idx) throw std::invalid_argument("action " + a.to_string() + " is not in the model's vocabulary");
    auto lp = action_log_probs(state, model, vectors, legal);
    total += lp[*idx];
    state.apply(a, model.unary_limit);
  }
  return total;
}

void InOrderModel::save(std::ostream& out) const {
  using namespace binary;
  put_magic(out, kModelMagic);
  put_u32(out, kModelVersion);
  put_u8(out, kInOrderKind);
  put_u64(out, seed);
  put_u32(out, static_cast<std::uint32_t>(epochs));
  put_u32(out, static_cast<std::uint32_t>(unary_limit));
  put_u32(out, static_cast<std::uint32_t>(beam_size));
  put_string(out, root_label);
  put_u32(out, static_cast<std::uint32_t>(actions.nonterminals().size()));
  for (const auto& nt : actions.nonterminals()) put_string(out, nt);
  scorer.save(out);
}

InOrderModel InOrderModel::load(std::istream& in) {
  using namespace binary;
  expect_magic(in, kModelMagic);
  if (get_u32(in) != kModelVersion) throw FormatError("unsupported model version");
  if (get_u8(in) != kInOrderKind) throw FormatError("not an in-order model");
  InOrderModel m;
  m.seed = get_u64(in);
  m.epochs = static_cast<int>(get_u32(in));
  m.unary_limit = static_cast<int>(get_u32(in));
  m.beam_size = static_cast<int>(get_u32(in));
  m.root_label = get_string(in);
  if (m.unary_limit < 1 || m.beam_size < 1) throw FormatError("corrupt in-order model header");
  std::uint32_t n = get_u32(in);
  std::vector<std::string> nts;
  for (std::uint32_t i = 0; i < n; ++i) nts.push_back(get_string(in));
  m.actions = ActionVocab(std::move(nts));
  m.scorer = LinearScorer::load(in);
  if (m.scorer.n_outputs() != m.actions.size()) throw FormatError("scorer outputs do not match the action vocabulary");
  return m;
}

namespace {

void collect_labels(const ParseTree& t, std::set<std::string>& out) {
  if (t.is_leaf()) return;
  out.insert(t.label());
  for (const auto& c : t.children()) collect_labels(c, out);
}

double dev_f1(const std::vector<ParseTree>& dev, const InOrderModel& model, int beam, const VectorTable* dev_vectors) {
  EvalConfig cfg;
  std::vector<BracketSet> gold, pred;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    auto words = leaves(dev[i]);
    const Matrix* vec = dev_vectors ? &dev_vectors->sentences[i] : nullptr;
    gold.push_back(eval_brackets(dev[i], cfg));
    pred.push_back(eval_brackets(beam_decode(words, model, beam, vec).tree, cfg));
  }
  return corpus_f1(gold, pred).f1;
}

}  // namespace

InOrderModel train_inorder(const std::vector<ParseTree>& train, const std::vector<ParseTree>& dev,
                           const TrainConfig& config, std::uint64_t seed, TrainingLog* log,
                           const VectorTable* train_vectors, const VectorTable* dev_vectors) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("cannot train on an empty treebank");
  if (train_vectors && train_vectors->sentences.size() != train.size())
    throw std::invalid_argument("training vectors are not aligned with the training treebank");
  if (train_vectors && (!dev_vectors || dev_vectors->sentences.size() != dev.size()))
    throw std::invalid_argument("a model with imported vectors needs aligned dev vectors");

  std::set<std::string> nts;
  int longest_chain = 1;
  for (const auto& t : train) {
    collect_labels(t, nts);
    longest_chain = std::max(longest_chain, max_unary_chain(t));
  }

  Rng rng(seed);
  InOrderModel model;
  model.seed = seed;
  model.unary_limit = config.unary_limit > 0 ? config.unary_limit : longest_chain;
  model.root_label = train.front().is_leaf() ? "TOP" : train.front().label();
  model.actions = ActionVocab(std::vector<std::string>(nts.begin(), nts.end()));
  model.scorer = LinearScorer(model.actions.size(), config.hash_bits);
  if (train_vectors)
    model.scorer.attach_projection(random_projection(train_vectors->dim, config.projection_dim, rng), 1);

  struct Example {
    std::size_t tree;
    std::vector<std::size_t> actions;
  };
  std::vector<Example> examples;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].is_leaf() || max_unary_chain(train[i]) > model.unary_limit) {
      ++skipped;
      continue;
    }
    Example ex{i, {}};
    for (const auto& a : oracle_actions(train[i])) ex.actions.push_back(*model.actions.index_of(a));
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) throw std::invalid_argument("no training tree fits within the unary chain limit");
  if (log && skipped)
    log->notes.push_back(std::to_string(skipped) + " training trees skipped: unary chain longer than " +
                         std::to_string(model.unary_limit));

  AdamOptimizer opt(config);
  ScorerGradient grad;
  std::vector<double> history;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::size_t> legal;

  LinearScorer best_scorer = model.scorer;
  double best_f1 = -1.0;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss = 0.0;
    LrMultipliers mult;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      std::size_t e = std::min(order.size(), b + config.batch_size);
      grad.clear();
      for (std::size_t k = b; k < e; ++k) {
        const Example& ex = examples[order[k]];
        const Matrix* vec = train_vectors ? &train_vectors->sentences[ex.tree] : nullptr;
        ParserState state(leaves(train[ex.tree]));
        for (auto target : ex.actions) {
          legal = legal_action_indices(state, model.actions, model.unary_limit);
          auto fv = featurize_state(state, config.hash_bits);
          auto slots = state_slots(state, vec);
          auto fwd = model.scorer.forward(fv, slots);
          auto lp = log_softmax(fwd.scores, legal);
          loss -= lp[target];
          std::vector<double> d(lp.size(), 0.0);
          for (auto a : legal) d[a] = std::exp(lp[a]);
          d[target] -= 1.0;
          model.scorer.backward(fv, slots, fwd, d, grad);
          state.apply(model.actions[target], model.unary_limit);
        }
      }
      mult = lr_schedule(opt.steps(), history, config);
      opt.step(model.scorer, grad, 1.0 / static_cast<double>(e - b), config.decoder_lr * mult.decoder,
               config.repr_lr * mult.representation);
    }

    double f1 = dev.empty() ? 0.0 : dev_f1(dev, model, config.dev_beam_size, dev_vectors);
    history.push_back(f1);
    if (dev.empty() || f1 > best_f1) {
      best_f1 = f1;
      best_scorer = model.scorer;
      best_epoch = epoch;
    }
    if (log)
      log->epochs.push_back({epoch, opt.steps(), loss / static_cast<double>(examples.size()), f1, mult,
                             mult.representation / mult.decoder});
  }

  model.scorer = std::move(best_scorer);
  model.epochs = best_epoch;
  if (log) log->best_epoch = best_epoch;
  return model;
}

}  // namespace xdparse
