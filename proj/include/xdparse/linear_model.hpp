#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "xdparse/features.hpp"
#include "xdparse/training.hpp"
#include "xdparse/vectors.hpp"

namespace xdparse {

struct ScorerGradient {
  std::unordered_map<std::uint32_t, std::vector<double>> rows;
  std::vector<double> dense;
  std::vector<double> projection;

  void clear();
};

/// Per-output linear scores over hashed sparse features, optionally plus a
/// dense term over projected imported vectors:
///
///   score[o] = sum_f value_f * W[f][o] + sum_s D[o, s] . (P e_s)
///
/// where e_s are the raw vectors for the input slots (span endpoints, or the
/// front-of-buffer word) and P is the learned Projection. A missing slot
/// vector (empty span) contributes zero.
class LinearScorer {
 public:
  LinearScorer() = default;
  LinearScorer(std::size_t n_outputs, int hash_bits);

  /// Enables the dense term. D starts at zero.
  void attach_projection(Projection projection, std::size_t n_slots);

  std::size_t n_outputs() const { return n_outputs_; }
  int hash_bits() const { return hash_bits_; }
  std::size_t n_slots() const { return n_slots_; }
  bool has_projection() const { return projection_.has_value(); }
  const Projection* projection() const { return projection_ ? &*projection_ : nullptr; }
  std::size_t n_feature_rows() const { return rows_.size(); }

  /// Weights of one hashed feature across all outputs; empty if never set.
  std::span<const float> row(std::uint32_t feature) const;
  /// Replaces the weights of one hashed feature.
  void set_row(std::uint32_t feature, std::vector<float> weights);

  struct Forward {
    std::vector<double> scores;
    std::vector<std::vector<float>> projected;
  };

  Forward forward(const FeatureVector& features, std::span<const std::span<const float>> slots = {}) const;

  /// Accumulates d(loss)/d(parameters) given d(loss)/d(scores).
  void backward(const FeatureVector& features, std::span<const std::span<const float>> slots, const Forward& fwd,
                std::span<const double> dscores, ScorerGradient& grad) const;

  void save(std::ostream& out) const;
  static LinearScorer load(std::istream& in);

  friend bool operator==(const LinearScorer&, const LinearScorer&) = default;

 private:
  friend class AdamOptimizer;

  std::size_t n_outputs_ = 0;
  int hash_bits_ = kDefaultHashBits;
  std::unordered_map<std::uint32_t, std::vector<float>> rows_;
  std::size_t n_slots_ = 0;
  std::vector<float> dense_;
  std::optional<Projection> projection_;
};

/// Adam with lazy updates for feature rows: only rows present in a gradient
/// are touched, with bias correction from the global step count.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const TrainConfig& config) : config_(config) {}

  /// One update. `scale` multiplies the gradient (e.g. 1/batch size).
  void step(LinearScorer& scorer, const ScorerGradient& grad, double scale, double decoder_lr, double repr_lr);

  long steps() const { return t_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };

  void update(std::span<float> params, std::span<const double> grad, Moments& mom, double scale, double lr);

  TrainConfig config_;
  long t_ = 0;
  std::unordered_map<std::uint32_t, Moments> row_moments_;
  Moments dense_moments_;
  Moments projection_moments_;
};

/// Numerically stable log-softmax restricted to the given indices; entries
/// outside the subset are -infinity.
std::vector<double> log_softmax(std::span<const double> scores, std::span<const std::size_t> subset);
std::vector<double> log_softmax(std::span<const double> scores);

/// Random projection initialisation, N(0, 1/dim_in).
Projection random_projection(std::size_t dim_in, std::size_t dim_out, Rng& rng);

}  // namespace xdparse
