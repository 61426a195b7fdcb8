#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace xdparse {

/// Optimisation schedule shared by both parsers.
struct TrainConfig {
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Base Adam rate for the parser's own weights.
  double decoder_lr = 1e-3;
  /// Base Adam rate for the projection of imported vectors.
  double repr_lr = 2e-5;
  /// Epochs without a new best dev F1 before the rates are halved.
  int patience = 2;
  double decay = 0.5;
  /// Linear warmup of the projection rate, in updates.
  long warmup_updates = 160;
  int max_epochs = 30;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  int hash_bits = 22;
  std::size_t projection_dim = 128;
  /// In-order only; 0 means "largest chain seen in training".
  int unary_limit = 4;
  /// Beam used for dev evaluation while training the in-order parser.
  int dev_beam_size = 1;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

struct LrMultipliers {
  double decoder = 1.0;
  double representation = 1.0;
};

/// Number of halvings triggered by a dev-F1 history: one each time `patience`
/// consecutive epochs end without a new best.
int plateau_halvings(std::span<const double> dev_history, int patience);

/// Multipliers for the base rates at update `step` (0-based) after the epochs
/// in dev_history. The decoder only sees plateau halving; the projection also
/// ramps linearly from 0 to 1 over warmup_updates.
LrMultipliers lr_schedule(long step, std::span<const double> dev_history, const TrainConfig& config);

/// Seeded generator with platform-independent derived distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct EpochRecord {
  int epoch = 0;
  long updates = 0;
  double loss = 0.0;
  double dev_f1 = 0.0;
  LrMultipliers multipliers;
  double warmup = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  std::vector<std::string> notes;

  /// Tab-separated, one line per epoch after a header.
  void write(std::ostream& out) const;
};

}  // namespace xdparse
