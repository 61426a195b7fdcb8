#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "xdparse/features.hpp"
#include "xdparse/linear_model.hpp"
#include "xdparse/training.hpp"

namespace xdparse {
namespace {

TEST(LrSchedule, WarmupRampsRepresentationOnly) {
  TrainConfig cfg;
  auto at0 = lr_schedule(0, {}, cfg);
  EXPECT_EQ(at0.decoder, 1.0);
  EXPECT_EQ(at0.representation, 0.0);
  auto mid = lr_schedule(80, {}, cfg);
  EXPECT_EQ(mid.decoder, 1.0);
  EXPECT_DOUBLE_EQ(mid.representation, 0.5);
  EXPECT_EQ(lr_schedule(160, {}, cfg).representation, 1.0);
  EXPECT_EQ(lr_schedule(100000, {}, cfg).representation, 1.0);
  cfg.warmup_updates = 0;
  EXPECT_EQ(lr_schedule(0, {}, cfg).representation, 1.0);
}

TEST(LrSchedule, PlateauHalvesBothRates) {
  TrainConfig cfg;
  std::vector<double> flat = {90, 90, 90};
  auto m = lr_schedule(1000, flat, cfg);
  EXPECT_EQ(m.decoder, 0.5);
  EXPECT_EQ(m.representation, 0.5);
  auto warm = lr_schedule(40, flat, cfg);
  EXPECT_DOUBLE_EQ(warm.representation, 0.125);
}

TEST(PlateauHalvings, Examples) {
  std::vector<double> flat = {90, 90, 90};
  EXPECT_EQ(plateau_halvings(std::span(flat).first(2), 2), 0);
  EXPECT_EQ(plateau_halvings(flat, 2), 1);
  std::vector<double> rising = {80, 81, 82, 83, 84, 85, 86};
  for (std::size_t k = 0; k <= rising.size(); ++k) EXPECT_EQ(plateau_halvings(std::span(rising).first(k), 1), 0);
  EXPECT_EQ(plateau_halvings(std::vector<double>{90, 89, 88, 87, 86}, 2), 2);
  EXPECT_EQ(plateau_halvings(std::vector<double>{90, 89, 91, 90, 89}, 2), 1);
  EXPECT_EQ(plateau_halvings(std::vector<double>{90, 89, 88}, 1), 2);
}

// Counts halvings by re-deriving the rule: a halving after epoch e whenever
// the last `patience` epochs since the previous halving or best all fail to
// beat the best so far.
int reference_halvings(const std::vector<double>& h, int patience) {
  int halvings = 0;
  std::size_t window_start = 1;
  for (std::size_t e = 1; e < h.size(); ++e) {
    double best = h[0];
    for (std::size_t i = 1; i < e; ++i) best = std::max(best, h[i]);
    if (h[e] > best) {
      window_start = e + 1;
      continue;
    }
    if (e + 1 - window_start == static_cast<std::size_t>(patience)) {
      ++halvings;
      window_start = e + 1;
    }
  }
  return halvings;
}

TEST(PlateauHalvings, MatchesReferenceOnRandomHistories) {
  Rng rng(91);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> h(rng.below(15));
    for (double& x : h) x = static_cast<double>(80 + rng.below(6));
    int patience = 1 + static_cast<int>(rng.below(3));
    EXPECT_EQ(plateau_halvings(h, patience), reference_halvings(h, patience));
  }
}

TEST(TrainConfig, Validate) {
  EXPECT_NO_THROW(TrainConfig{}.validate());
  auto broken = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(broken([](TrainConfig& c) { c.batch_size = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](TrainConfig& c) { c.patience = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](TrainConfig& c) { c.decoder_lr = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](TrainConfig& c) { c.beta2 = 1.0; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](TrainConfig& c) { c.decay = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](TrainConfig& c) { c.seeds.clear(); }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](TrainConfig& c) { c.hash_bits = 33; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](TrainConfig& c) { c.unary_limit = -1; }).validate(), std::invalid_argument);
  EXPECT_THROW(broken([](TrainConfig& c) { c.dev_beam_size = 0; }).validate(), std::invalid_argument);
  EXPECT_NO_THROW(broken([](TrainConfig& c) { c.unary_limit = 0; }).validate());
}

TEST(Rng, DeterministicAndWellSpread) {
  Rng a(7), b(7), c(8);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(Rng(7).next(), c.next());

  Rng r(92);
  const int n = 20000;
  double sum = 0, sq = 0, usum = 0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    sum += x;
    sq += x * x;
    double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    usum += u;
    ASSERT_LT(r.below(3), 3u);
  }
  EXPECT_NEAR(sum / n, 0.0, 0.05);
  EXPECT_NEAR(sq / n, 1.0, 0.05);
  EXPECT_NEAR(usum / n, 0.5, 0.02);

  std::vector<int> v = {1, 2, 3, 4, 5, 6};
  auto w = v;
  Rng s1(3), s2(3);
  s1.shuffle(v);
  s2.shuffle(w);
  EXPECT_EQ(v, w);
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, (std::vector<int>{1, 2, 3, 4, 5, 6}));
}

TEST(LogSoftmax, NormalisesAndMasks) {
  std::vector<double> s = {1.0, 2.0, 3.0, 1000.0};
  auto all = log_softmax(s);
  double z = 0;
  for (double x : all) z += std::exp(x);
  EXPECT_NEAR(z, 1.0, 1e-12);
  EXPECT_NEAR(all[3], 0.0, 1e-12);

  std::vector<std::size_t> subset = {0, 2};
  auto part = log_softmax(s, subset);
  EXPECT_EQ(part[1], -INFINITY);
  EXPECT_EQ(part[3], -INFINITY);
  EXPECT_NEAR(part[2] - part[0], 2.0, 1e-12);
  EXPECT_NEAR(std::exp(part[0]) + std::exp(part[2]), 1.0, 1e-12);
  EXPECT_EQ(log_softmax(s, {})[0], -INFINITY);
}

FeatureVector sparse(std::initializer_list<std::pair<std::uint32_t, float>> e) {
  FeatureVector fv;
  fv.entries.assign(e.begin(), e.end());
  return fv;
}

TEST(LinearScorer, SparseForwardAndBackward) {
  LinearScorer s(3, 8);
  s.set_row(5, {1.0f, -2.0f, 0.5f});
  s.set_row(9, {0.25f, 0.0f, 4.0f});
  auto fv = sparse({{5, 2.0f}, {9, 1.0f}, {200, 3.0f}});
  auto fwd = s.forward(fv);
  EXPECT_EQ(fwd.scores, (std::vector<double>{2.25, -4.0, 5.0}));

  ScorerGradient g;
  std::vector<double> d = {1.0, 0.0, -1.0};
  s.backward(fv, {}, fwd, d, g);
  EXPECT_EQ(g.rows.at(5), (std::vector<double>{2.0, 0.0, -2.0}));
  EXPECT_EQ(g.rows.at(200), (std::vector<double>{3.0, 0.0, -3.0}));

  EXPECT_THROW(s.set_row(256, {0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(s.set_row(1, {0, 0}), std::invalid_argument);
  EXPECT_THROW(LinearScorer(0, 8), std::invalid_argument);
}

TEST(AdamOptimizer, MatchesHandComputedSteps) {
  TrainConfig cfg;
  LinearScorer s(2, 8);
  s.set_row(3, {0.5f, -0.5f});
  AdamOptimizer opt(cfg);
  ScorerGradient g;
  g.rows[3] = {2.0, -4.0};
  g.rows[7] = {1.0, 0.0};

  double w[2] = {0.5, -0.5}, m[2] = {0, 0}, v[2] = {0, 0};
  const double scale = 0.5, lr = 0.01;
  for (int t = 1; t <= 3; ++t) {
    opt.step(s, g, scale, lr, 1.0);
    for (int i = 0; i < 2; ++i) {
      double gi = g.rows[3][i] * scale;
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      w[i] = static_cast<float>(w[i] - lr * mh / (std::sqrt(vh) + 1e-8));
      EXPECT_NEAR(s.row(3)[i], w[i], 1e-7) << "step " << t;
    }
  }
  EXPECT_EQ(opt.steps(), 3);
  // A row first seen in a gradient starts at zero; a zero gradient leaves the
  // weight in place.
  ASSERT_EQ(s.row(7).size(), 2u);
  EXPECT_NEAR(s.row(7)[0], -3 * 0.01, 1e-6);
  EXPECT_EQ(s.row(7)[1], 0.0f);
}

TEST(LinearScorer, DenseGradientsSatisfyEulerIdentity) {
  // score is linear in each of W, D and P separately, so sum(grad * param)
  // recovers each term's contribution to dscores . score.
  Rng rng(93);
  const std::size_t din = 6, dout = 4;
  std::vector<float> pw(din * dout);
  for (float& x : pw) x = static_cast<float>(rng.normal());
  LinearScorer s(3, 10);
  s.attach_projection(Projection(din, dout, pw), 2);
  s.set_row(1, {0.3f, -0.2f, 0.1f});

  std::vector<float> e0(din), e1(din);
  for (float& x : e0) x = static_cast<float>(rng.normal());
  for (float& x : e1) x = static_cast<float>(rng.normal());
  std::vector<std::span<const float>> slots = {e0, e1};
  auto fv = sparse({{1, 1.0f}});

  // Move D off zero with one update.
  AdamOptimizer opt(TrainConfig{});
  ScorerGradient g;
  std::vector<double> d0 = {1.0, -1.0, 0.5};
  s.backward(fv, slots, s.forward(fv, slots), d0, g);
  opt.step(s, g, 1.0, 0.1, 0.0001);

  std::vector<double> d = {0.7, 0.2, -1.1};
  auto fwd = s.forward(fv, slots);
  g.clear();
  s.backward(fv, slots, fwd, d, g);

  double total = 0;
  for (std::size_t o = 0; o < 3; ++o) total += d[o] * fwd.scores[o];
  double sparse_part = 0;
  for (std::size_t o = 0; o < 3; ++o) sparse_part += g.rows.at(1)[o] * s.row(1)[o];
  double proj_part = 0;
  auto p = s.projection()->weights();
  for (std::size_t i = 0; i < p.size(); ++i) proj_part += g.projection[i] * p[i];
  // The dense term is bilinear in (D, P): its D-identity and P-identity agree.
  EXPECT_NEAR(sparse_part + proj_part, total, 1e-6 * std::max(1.0, std::abs(total)));

  // Without D, no gradient reaches P.
  LinearScorer fresh(3, 10);
  fresh.attach_projection(Projection(din, dout, pw), 2);
  ScorerGradient g2;
  fresh.backward(fv, slots, fresh.forward(fv, slots), d, g2);
  for (double x : g2.projection) EXPECT_EQ(x, 0.0);
  double dense_norm = 0;
  for (double x : g2.dense) dense_norm += std::abs(x);
  EXPECT_GT(dense_norm, 0.0);
}

TEST(LinearScorer, FiniteDifferenceThroughAdamFirstStep) {
  // Adam's first step moves each parameter by lr * g / (|g| + eps), so a tiny
  // learning rate yields a directional derivative along -sign(g).
  Rng rng(94);
  const std::size_t din = 5, dout = 3;
  std::vector<float> pw(din * dout);
  for (float& x : pw) x = static_cast<float>(rng.normal());
  LinearScorer s(2, 10);
  s.attach_projection(Projection(din, dout, pw), 1);
  std::vector<float> e(din);
  for (float& x : e) x = static_cast<float>(rng.normal());
  std::vector<std::span<const float>> slots = {e};
  FeatureVector none;
  std::vector<double> d = {1.0, -0.5};

  AdamOptimizer warm(TrainConfig{});
  ScorerGradient g;
  s.backward(none, slots, s.forward(none, slots), d, g);
  warm.step(s, g, 1.0, 0.5, 1e-9);

  auto objective = [&](const LinearScorer& sc) {
    auto f = sc.forward(none, slots);
    return d[0] * f.scores[0] + d[1] * f.scores[1];
  };
  g.clear();
  s.backward(none, slots, s.forward(none, slots), d, g);
  double abs_proj = 0;
  for (double x : g.projection) abs_proj += std::abs(x);
  ASSERT_GT(abs_proj, 0.0);

  LinearScorer moved = s;
  AdamOptimizer probe(TrainConfig{});
  ScorerGradient only_proj;
  only_proj.projection = g.projection;
  const double h = 1e-4;
  probe.step(moved, only_proj, 1.0, 0.0, h);
  double measured = (objective(moved) - objective(s)) / h;
  EXPECT_NEAR(measured, -abs_proj, 2e-2 * abs_proj);
}

TEST(LinearScorer, SaveLoadRoundTrip) {
  Rng rng(95);
  LinearScorer s(4, 12);
  for (std::uint32_t f = 0; f < 50; ++f)
    s.set_row(f * 37 % 4096, {static_cast<float>(rng.normal()), 1.0f, -1.0f, 0.0f});
  s.attach_projection(random_projection(7, 3, rng), 2);
  std::stringstream buf;
  s.save(buf);
  EXPECT_EQ(LinearScorer::load(buf), s);
  std::istringstream truncated(buf.str().substr(0, buf.str().size() / 2));
  EXPECT_ANY_THROW(LinearScorer::load(truncated));
}

TEST(TrainingLog, WriteFormat) {
  TrainingLog log;
  log.epochs.push_back({1, 10, 2.5, 88.125, {1.0, 0.0625}, 0.0625});
  log.epochs.push_back({2, 20, 1.25, 90.0, {0.5, 0.0625}, 0.125});
  log.best_epoch = 2;
  log.notes.push_back("3 training trees skipped");
  std::ostringstream out;
  log.write(out);
  EXPECT_EQ(out.str(),
            "epoch\tupdates\tloss\tdev_f1\tdecoder_lr_mult\trepr_lr_mult\twarmup\n"
            "1\t10\t2.5000\t88.1250\t1.000000\t0.062500\t0.062500\n"
            "2\t20\t1.2500\t90.0000\t0.500000\t0.062500\t0.125000\n"
            "# best_epoch\t2\n"
            "# 3 training trees skipped\n");
}

}  // namespace
}  // namespace xdparse
