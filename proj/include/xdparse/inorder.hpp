#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "xdparse/linear_model.hpp"
#include "xdparse/training.hpp"
#include "xdparse/transition.hpp"
#include "xdparse/vectors.hpp"

namespace xdparse {

inline constexpr int kDefaultBeamSize = 10;

struct InOrderModel {
  ActionVocab actions;
  LinearScorer scorer;
  int unary_limit = 4;
  int beam_size = kDefaultBeamSize;
  std::string root_label = "TOP";
  std::uint64_t seed = 0;
  int epochs = 0;

  void save(std::ostream& out) const;
  static InOrderModel load(std::istream& in);
};

/// Action log-probabilities in state: a softmax over the legal actions only,
/// -infinity elsewhere. `legal` receives the legal action indices.
std::vector<double> action_log_probs(const ParserState& state, const InOrderModel& model, const Matrix* vectors,
                                     std::vector<std::size_t>& legal);

struct InOrderParse {
  ParseTree tree;
  /// Total log-probability of the derivation.
  double score = 0.0;
  std::vector<Action> actions;
  /// No hypothesis finished within the action cap and the best partial
  /// derivation was completed by force.
  bool forced = false;
};

/// Upper bound on derivation length used by the decoders.
std::size_t action_cap(std::size_t n_words);

/// Beam search over derivations scored by total log-probability, without
/// length normalisation. Each step keeps the beam_size best one-action
/// extensions; extensions ending in FINISH move to a completed pool. Search
/// stops once the pool holds beam_size derivations and no live item scores
/// above the best of them, or the beam empties, or the action cap is reached.
InOrderParse beam_decode(std::span<const Word> sentence, const InOrderModel& model, int beam_size,
                         const Matrix* vectors = nullptr);

/// Takes the most probable legal action at every step.
InOrderParse greedy_decode(std::span<const Word> sentence, const InOrderModel& model, const Matrix* vectors = nullptr);

/// Total log-probability of a given derivation under the model.
double derivation_score(std::span<const Action> actions, std::span<const Word> sentence, const InOrderModel& model,
                        const Matrix* vectors = nullptr);

/// Teacher-forced cross-entropy over static-oracle action sequences. Trees
/// whose unary chains exceed the limit are skipped (noted in the log).
InOrderModel train_inorder(const std::vector<ParseTree>& train, const std::vector<ParseTree>& dev,
                           const TrainConfig& config, std::uint64_t seed, TrainingLog* log = nullptr,
                           const VectorTable* train_vectors = nullptr, const VectorTable* dev_vectors = nullptr);

}  // namespace xdparse
