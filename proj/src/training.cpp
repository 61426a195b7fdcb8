#include "xdparse/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace xdparse {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid training config: ") + what);
  };
  require(batch_size >= 1, "batch_size must be >= 1");
  require(patience >= 1, "patience must be >= 1");
  require(decoder_lr > 0 && repr_lr > 0, "learning rates must be > 0");
  require(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1, "betas must lie in [0, 1)");
  require(epsilon > 0, "epsilon must be > 0");
  require(decay > 0 && decay <= 1, "decay must lie in (0, 1]");
  require(warmup_updates >= 0, "warmup_updates must be >= 0");
  require(max_epochs >= 1, "max_epochs must be >= 1");
  require(!seeds.empty(), "at least one seed is required");
  require(hash_bits >= 1 && hash_bits <= 32, "hash_bits must lie in [1, 32]");
  require(projection_dim >= 1, "projection_dim must be >= 1");
  require(unary_limit >= 0, "unary_limit must be >= 1, or 0 for auto");
  require(dev_beam_size >= 1, "dev_beam_size must be >= 1");
}

int plateau_halvings(std::span<const double> dev_history, int patience) {
  int halvings = 0;
  int since_best = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (double f : dev_history) {
    if (f > best) {
      best = f;
      since_best = 0;
    } else if (++since_best == patience) {
      ++halvings;
      since_best = 0;
    }
  }
  return halvings;
}

LrMultipliers lr_schedule(long step, std::span<const double> dev_history, const TrainConfig& config) {
  double plateau = std::pow(config.decay, plateau_halvings(dev_history, config.patience));
  double warmup = config.warmup_updates > 0
                      ? std::min(1.0, static_cast<double>(step) / static_cast<double>(config.warmup_updates))
                      : 1.0;
  return {plateau, warmup * plateau};
}

double Rng::normal() {
  // Box-Muller; u1 is kept away from zero.
  double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

void TrainingLog::write(std::ostream& out) const {
  auto flags = out.flags();
  out << "epoch\tupdates\tloss\tdev_f1\tdecoder_lr_mult\trepr_lr_mult\twarmup\n";
  for (const auto& e : epochs) {
    out << e.epoch << '\t' << e.updates << '\t' << std::fixed << std::setprecision(4) << e.loss << '\t' << e.dev_f1
        << '\t' << std::setprecision(6) << e.multipliers.decoder << '\t' << e.multipliers.representation << '\t'
        << e.warmup << '\n';
  }
  out << "# best_epoch\t" << best_epoch << '\n';
  for (const auto& n : notes) out << "# " << n << '\n';
  out.flags(flags);
}

}  // namespace xdparse
