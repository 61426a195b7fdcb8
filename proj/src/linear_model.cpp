#include "xdparse/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "xdparse/binary_io.hpp"

namespace xdparse {

void ScorerGradient::clear() {
  rows.clear();
  std::fill(dense.begin(), dense.end(), 0.0);
  std::fill(projection.begin(), projection.end(), 0.0);
}

LinearScorer::LinearScorer(std::size_t n_outputs, int hash_bits) : n_outputs_(n_outputs), hash_bits_(hash_bits) {
  if (n_outputs == 0) throw std::invalid_argument("scorer needs at least one output");
}

void LinearScorer::attach_projection(Projection projection, std::size_t n_slots) {
  if (n_slots == 0) throw std::invalid_argument("projection needs at least one input slot");
  n_slots_ = n_slots;
  dense_.assign(n_outputs_ * n_slots * projection.dim_out(), 0.0f);
  projection_ = std::move(projection);
}

std::span<const float> LinearScorer::row(std::uint32_t feature) const {
  auto it = rows_.find(feature);
  if (it == rows_.end()) return {};
  return it->second;
}

void LinearScorer::set_row(std::uint32_t feature, std::vector<float> weights) {
  if (weights.size() != n_outputs_) throw std::invalid_argument("row width does not match the number of outputs");
  if (hash_bits_ < 32 && (feature >> hash_bits_) != 0) throw std::invalid_argument("feature index outside the hash space");
  rows_[feature] = std::move(weights);
}

LinearScorer::Forward LinearScorer::forward(const FeatureVector& features,
                                            std::span<const std::span<const float>> slots) const {
  Forward fwd;
  fwd.scores.assign(n_outputs_, 0.0);
  for (const auto& [idx, val] : features.entries) {
    auto it = rows_.find(idx);
    if (it == rows_.end()) continue;
    const auto& row = it->second;
    for (std::size_t o = 0; o < n_outputs_; ++o) fwd.scores[o] += static_cast<double>(val) * row[o];
  }
  if (!projection_) return fwd;

  if (slots.size() != n_slots_)
    throw std::invalid_argument("scorer expects " + std::to_string(n_slots_) + " vector slots");
  const std::size_t d = projection_->dim_out();
  const std::size_t width = n_slots_ * d;
  fwd.projected.resize(n_slots_);
  for (std::size_t s = 0; s < n_slots_; ++s) {
    if (slots[s].empty()) {
      fwd.projected[s].assign(d, 0.0f);
      continue;
    }
    fwd.projected[s] = projection_->apply(slots[s]);
    for (std::size_t o = 0; o < n_outputs_; ++o) {
      const float* w = dense_.data() + o * width + s * d;
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += static_cast<double>(w[k]) * fwd.projected[s][k];
      fwd.scores[o] += acc;
    }
  }
  return fwd;
}

void LinearScorer::backward(const FeatureVector& features, std::span<const std::span<const float>> slots,
                            const Forward& fwd, std::span<const double> dscores, ScorerGradient& grad) const {
  for (const auto& [idx, val] : features.entries) {
    auto& g = grad.rows[idx];
    if (g.empty()) g.assign(n_outputs_, 0.0);
    for (std::size_t o = 0; o < n_outputs_; ++o) g[o] += dscores[o] * val;
  }
  if (!projection_) return;

  const std::size_t d = projection_->dim_out();
  const std::size_t din = projection_->dim_in();
  const std::size_t width = n_slots_ * d;
  if (grad.dense.size() != dense_.size()) grad.dense.assign(dense_.size(), 0.0);
  if (grad.projection.size() != din * d) grad.projection.assign(din * d, 0.0);

  std::vector<double> dx(d);
  for (std::size_t s = 0; s < n_slots_; ++s) {
    if (slots[s].empty()) continue;
    std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t o = 0; o < n_outputs_; ++o) {
      if (dscores[o] == 0.0) continue;
      const float* w = dense_.data() + o * width + s * d;
      double* gw = grad.dense.data() + o * width + s * d;
      for (std::size_t k = 0; k < d; ++k) {
        gw[k] += dscores[o] * fwd.projected[s][k];
        dx[k] += dscores[o] * w[k];
      }
    }
    for (std::size_t k = 0; k < d; ++k) {
      double* gp = grad.projection.data() + k * din;
      for (std::size_t i = 0; i < din; ++i) gp[i] += dx[k] * slots[s][i];
    }
  }
}

void LinearScorer::save(std::ostream& out) const {
  using namespace binary;
  put_u32(out, static_cast<std::uint32_t>(n_outputs_));
  put_u32(out, static_cast<std::uint32_t>(hash_bits_));
  std::vector<std::uint32_t> keys;
  keys.reserve(rows_.size());
  for (const auto& [k, _] : rows_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  put_u64(out, keys.size());
  for (auto k : keys) {
    put_u32(out, k);
    for (float w : rows_.at(k)) put_f32(out, w);
  }
  put_u8(out, projection_ ? 1 : 0);
  if (projection_) {
    put_u32(out, static_cast<std::uint32_t>(n_slots_));
    put_u64(out, projection_->dim_in());
    put_u64(out, projection_->dim_out());
    put_floats(out, std::vector<float>(projection_->weights().begin(), projection_->weights().end()));
    put_floats(out, dense_);
  }
}

LinearScorer LinearScorer::load(std::istream& in) {
  using namespace binary;
  LinearScorer s;
  s.n_outputs_ = get_u32(in);
  s.hash_bits_ = static_cast<int>(get_u32(in));
  if (s.n_outputs_ == 0 || s.hash_bits_ < 1 || s.hash_bits_ > 32) throw FormatError("corrupt scorer header");
  std::uint64_t n_rows = get_u64(in);
  for (std::uint64_t r = 0; r < n_rows; ++r) {
    std::uint32_t k = get_u32(in);
    std::vector<float> row(s.n_outputs_);
    for (float& w : row) w = get_f32(in);
    s.rows_.emplace(k, std::move(row));
  }
  if (get_u8(in)) {
    s.n_slots_ = get_u32(in);
    std::uint64_t din = get_u64(in);
    std::uint64_t dout = get_u64(in);
    auto weights = get_floats(in);
    s.projection_ = Projection(din, dout, std::move(weights));
    s.dense_ = get_floats(in);
    if (s.dense_.size() != s.n_outputs_ * s.n_slots_ * dout) throw FormatError("corrupt dense weights");
  }
  return s;
}

void AdamOptimizer::update(std::span<float> params, std::span<const double> grad, Moments& mom, double scale,
                           double lr) {
  if (mom.m.size() != params.size()) {
    mom.m.assign(params.size(), 0.0);
    mom.v.assign(params.size(), 0.0);
  }
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grad[i] * scale;
    mom.m[i] = b1 * mom.m[i] + (1.0 - b1) * g;
    mom.v[i] = b2 * mom.v[i] + (1.0 - b2) * g * g;
    double mhat = mom.m[i] / c1;
    double vhat = mom.v[i] / c2;
    params[i] = static_cast<float>(params[i] - lr * mhat / (std::sqrt(vhat) + config_.epsilon));
  }
}

void AdamOptimizer::step(LinearScorer& scorer, const ScorerGradient& grad, double scale, double decoder_lr,
                         double repr_lr) {
  ++t_;
  for (const auto& [idx, g] : grad.rows) {
    auto& row = scorer.rows_[idx];
    if (row.empty()) row.assign(scorer.n_outputs_, 0.0f);
    update(row, g, row_moments_[idx], scale, decoder_lr);
  }
  if (scorer.projection_) {
    if (!grad.dense.empty()) update(scorer.dense_, grad.dense, dense_moments_, scale, decoder_lr);
    if (!grad.projection.empty()) update(scorer.projection_->weights(), grad.projection, projection_moments_, scale, repr_lr);
  }
}

std::vector<double> log_softmax(std::span<const double> scores, std::span<const std::size_t> subset) {
  std::vector<double> out(scores.size(), -std::numeric_limits<double>::infinity());
  if (subset.empty()) return out;
  double mx = -std::numeric_limits<double>::infinity();
  for (auto i : subset) mx = std::max(mx, scores[i]);
  double z = 0.0;
  for (auto i : subset) z += std::exp(scores[i] - mx);
  double lz = mx + std::log(z);
  for (auto i : subset) out[i] = scores[i] - lz;
  return out;
}

std::vector<double> log_softmax(std::span<const double> scores) {
  std::vector<std::size_t> all(scores.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return log_softmax(scores, all);
}

Projection random_projection(std::size_t dim_in, std::size_t dim_out, Rng& rng) {
  std::vector<float> w(dim_in * dim_out);
  double scale = 1.0 / std::sqrt(static_cast<double>(dim_in));
  for (float& x : w) x = static_cast<float>(rng.normal() * scale);
  return Projection(dim_in, dim_out, std::move(w));
}

}  // namespace xdparse
