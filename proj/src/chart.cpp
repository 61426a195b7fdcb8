#include "xdparse/chart.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "xdparse/binary_io.hpp"
#include "xdparse/eval.hpp"
#include "xdparse/features.hpp"

namespace xdparse {

LabelVocab::LabelVocab(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  for (auto& l : labels) {
    if (l.empty()) throw std::invalid_argument("the empty label is implicit in a LabelVocab");
    index_[l] = labels_.size();
    labels_.push_back(std::move(l));
  }
}

std::optional<std::size_t> LabelVocab::index_of(const std::string& label) const {
  if (label.empty()) return kEmpty;
  if (auto it = index_.find(label); it != index_.end()) return it->second;
  return std::nullopt;
}

SpanScoreGrid::SpanScoreGrid(int n, std::vector<std::string> labels) : n_(n), labels_(std::move(labels)) {
  if (n < 0) throw std::invalid_argument("negative sentence length");
  if (labels_.empty()) throw std::invalid_argument("grid needs at least the empty label");
  scores_.assign(static_cast<std::size_t>(n + 1) * (n + 1) * labels_.size(), 0.0);
}

namespace {

constexpr char kModelMagic[5] = "XDPM";
constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint8_t kChartKind = 'C';

std::vector<std::span<const float>> span_slots(const Matrix* vectors, int start, int end) {
  if (!vectors) return {};
  return {vectors->row(start), vectors->row(end - 1)};
}

void check_vectors(const LinearScorer& scorer, const Matrix* vectors, std::size_t n) {
  if (scorer.has_projection()) {
    if (!vectors) throw std::invalid_argument("model uses imported vectors but none were supplied");
    if (vectors->rows != n) throw std::invalid_argument("vector rows do not match sentence length");
    if (vectors->cols != scorer.projection()->dim_in())
      throw std::invalid_argument("vector dimension does not match the model's projection");
  }
}

// Recovers the chosen tree; returns the (possibly spliced) children for [i, j).
void build(const std::vector<std::size_t>& label_of, const std::vector<int>& split_of, int n,
           const std::vector<std::string>& labels, std::span<const Word> sentence, int i, int j,
           std::vector<ParseTree>& out) {
  std::size_t cell = static_cast<std::size_t>(i) * (n + 1) + j;
  std::vector<ParseTree> kids;
  if (j - i == 1) {
    kids.push_back(ParseTree::leaf(sentence[i]));
  } else {
    int k = split_of[cell];
    build(label_of, split_of, n, labels, sentence, i, k, kids);
    build(label_of, split_of, n, labels, sentence, k, j, kids);
  }
  std::size_t lab = label_of[cell];
  if (lab == LabelVocab::kEmpty) {
    for (auto& c : kids) out.push_back(std::move(c));
  } else {
    out.push_back(ParseTree::node(labels[lab], std::move(kids)));
  }
}

}  // namespace

ChartParse cky_decode(const SpanScoreGrid& grid, std::span<const Word> sentence) {
  const int n = grid.n();
  if (n == 0) throw std::invalid_argument("cannot decode an empty sentence");
  if (static_cast<int>(sentence.size()) != n) throw std::invalid_argument("sentence length does not match the grid");
  if (grid.n_labels() < 2) throw std::invalid_argument("grid has no non-empty label for the root span");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j <= n; ++j)
      for (double s : grid.row(i, j))
        if (!std::isfinite(s)) throw std::invalid_argument("grid scores must be finite");

  const std::size_t cells = static_cast<std::size_t>(n + 1) * (n + 1);
  std::vector<double> best(cells, 0.0);
  std::vector<std::size_t> label_of(cells, 0);
  std::vector<int> split_of(cells, -1);

  for (int len = 1; len <= n; ++len) {
    for (int i = 0; i + len <= n; ++i) {
      int j = i + len;
      std::size_t cell = static_cast<std::size_t>(i) * (n + 1) + j;
      auto row = grid.row(i, j);
      std::size_t first = (i == 0 && j == n) ? 1 : 0;
      std::size_t lab = first;
      for (std::size_t l = first + 1; l < row.size(); ++l)
        if (row[l] > row[lab]) lab = l;
      label_of[cell] = lab;

      if (len == 1) {
        best[cell] = row[lab];
        continue;
      }
      int arg = i + 1;
      double split_best = best[static_cast<std::size_t>(i) * (n + 1) + arg] + best[static_cast<std::size_t>(arg) * (n + 1) + j];
      for (int k = i + 2; k < j; ++k) {
        double s = best[static_cast<std::size_t>(i) * (n + 1) + k] + best[static_cast<std::size_t>(k) * (n + 1) + j];
        if (s > split_best) {
          split_best = s;
          arg = k;
        }
      }
      split_of[cell] = arg;
      best[cell] = row[lab] + split_best;
    }
  }

  std::vector<ParseTree> root;
  build(label_of, split_of, n, grid.labels(), sentence, 0, n, root);
  return {expand_unaries(root.front()), best[n]};
}

SpanScoreGrid score_spans(std::span<const Word> sentence, const ChartModel& model, const Matrix* vectors) {
  const int n = static_cast<int>(sentence.size());
  check_vectors(model.scorer, vectors, sentence.size());
  SpanScoreGrid grid(n, model.labels.labels());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      auto fv = featurize_span(sentence, i, j, model.scorer.hash_bits());
      auto slots = span_slots(model.scorer.has_projection() ? vectors : nullptr, i, j);
      auto fwd = model.scorer.forward(fv, slots);
      auto lp = log_softmax(fwd.scores);
      std::copy(lp.begin(), lp.end(), grid.row(i, j).begin());
    }
  }
  return grid;
}

void shift_to_empty_baseline(SpanScoreGrid& grid) {
  for (int i = 0; i < grid.n(); ++i) {
    for (int j = i + 1; j <= grid.n(); ++j) {
      auto row = grid.row(i, j);
      const double empty = row[0];
      for (double& s : row) s -= empty;
    }
  }
}

ChartParse parse_chart(std::span<const Word> sentence, const ChartModel& model, const Matrix* vectors) {
  auto grid = score_spans(sentence, model, vectors);
  shift_to_empty_baseline(grid);
  return cky_decode(grid, sentence);
}

void ChartModel::save(std::ostream& out) const {
  using namespace binary;
  put_magic(out, kModelMagic);
  put_u32(out, kModelVersion);
  put_u8(out, kChartKind);
  put_u64(out, seed);
  put_u32(out, static_cast<std::uint32_t>(epochs));
  put_u32(out, static_cast<std::uint32_t>(labels.size() - 1));
  for (std::size_t i = 1; i < labels.size(); ++i) put_string(out, labels[i]);
  scorer.save(out);
}

ChartModel ChartModel::load(std::istream& in) {
  using namespace binary;
  expect_magic(in, kModelMagic);
  if (get_u32(in) != kModelVersion) throw FormatError("unsupported model version");
  if (get_u8(in) != kChartKind) throw FormatError("not a chart model");
  ChartModel m;
  m.seed = get_u64(in);
  m.epochs = static_cast<int>(get_u32(in));
  std::uint32_t n = get_u32(in);
  std::vector<std::string> labels;
  for (std::uint32_t i = 0; i < n; ++i) labels.push_back(get_string(in));
  m.labels = LabelVocab(std::move(labels));
  m.scorer = LinearScorer::load(in);
  if (m.scorer.n_outputs() != m.labels.size()) throw FormatError("scorer outputs do not match the label vocabulary");
  return m;
}

namespace {

struct GoldSpans {
  int n = 0;
  // label index per (start, end) cell; empty label when not a constituent
  std::vector<std::size_t> label;
};

GoldSpans gold_spans(const ParseTree& tree, const LabelVocab& vocab, long& unseen) {
  GoldSpans g;
  g.n = static_cast<int>(tree.size());
  g.label.assign(static_cast<std::size_t>(g.n + 1) * (g.n + 1), LabelVocab::kEmpty);
  for (const auto& s : spans_of(collapse_unaries(tree))) {
    if (auto idx = vocab.index_of(s.label))
      g.label[static_cast<std::size_t>(s.start) * (g.n + 1) + s.end] = *idx;
    else
      ++unseen;
  }
  return g;
}

double dev_f1(const std::vector<ParseTree>& dev, const ChartModel& model, const VectorTable* dev_vectors) {
  EvalConfig cfg;
  std::vector<BracketSet> gold, pred;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    auto words = leaves(dev[i]);
    const Matrix* vec = dev_vectors ? &dev_vectors->sentences[i] : nullptr;
    gold.push_back(eval_brackets(dev[i], cfg));
    pred.push_back(eval_brackets(parse_chart(words, model, vec).tree, cfg));
  }
  return corpus_f1(gold, pred).f1;
}

}  // namespace

ChartModel train_chart(const std::vector<ParseTree>& train, const std::vector<ParseTree>& dev,
                       const TrainConfig& config, std::uint64_t seed, TrainingLog* log,
                       const VectorTable* train_vectors, const VectorTable* dev_vectors) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("cannot train on an empty treebank");
  if (train_vectors && train_vectors->sentences.size() != train.size())
    throw std::invalid_argument("training vectors are not aligned with the training treebank");
  if (train_vectors && (!dev_vectors || dev_vectors->sentences.size() != dev.size()))
    throw std::invalid_argument("a model with imported vectors needs aligned dev vectors");

  std::set<std::string> label_set;
  for (const auto& t : train)
    for (const auto& s : spans_of(collapse_unaries(t))) label_set.insert(s.label);

  Rng rng(seed);
  ChartModel model;
  model.seed = seed;
  model.labels = LabelVocab(std::vector<std::string>(label_set.begin(), label_set.end()));
  model.scorer = LinearScorer(model.labels.size(), config.hash_bits);
  if (train_vectors)
    model.scorer.attach_projection(random_projection(train_vectors->dim, config.projection_dim, rng), 2);

  long unseen = 0;
  std::vector<GoldSpans> gold;
  gold.reserve(train.size());
  for (const auto& t : train) gold.push_back(gold_spans(t, model.labels, unseen));
  std::vector<std::vector<Word>> sentences;
  sentences.reserve(train.size());
  for (const auto& t : train) sentences.push_back(leaves(t));

  if (log) {
    long dev_unseen = 0;
    for (const auto& t : dev) gold_spans(t, model.labels, dev_unseen);
    if (dev_unseen) log->notes.push_back(std::to_string(dev_unseen) + " dev brackets carry labels unseen in training");
  }

  AdamOptimizer opt(config);
  ScorerGradient grad;
  std::vector<double> history;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

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
        std::size_t idx = order[k];
        const auto& words = sentences[idx];
        const Matrix* vec = train_vectors ? &train_vectors->sentences[idx] : nullptr;
        const GoldSpans& g = gold[idx];
        for (int i = 0; i < g.n; ++i) {
          for (int j = i + 1; j <= g.n; ++j) {
            auto fv = featurize_span(words, i, j, config.hash_bits);
            auto slots = span_slots(vec, i, j);
            auto fwd = model.scorer.forward(fv, slots);
            auto lp = log_softmax(fwd.scores);
            std::size_t target = g.label[static_cast<std::size_t>(i) * (g.n + 1) + j];
            loss -= lp[target];
            std::vector<double> d(lp.size());
            for (std::size_t l = 0; l < lp.size(); ++l) d[l] = std::exp(lp[l]);
            d[target] -= 1.0;
            model.scorer.backward(fv, slots, fwd, d, grad);
          }
        }
      }
      mult = lr_schedule(opt.steps(), history, config);
      opt.step(model.scorer, grad, 1.0 / static_cast<double>(e - b), config.decoder_lr * mult.decoder,
               config.repr_lr * mult.representation);
    }

    double f1 = dev.empty() ? 0.0 : dev_f1(dev, model, dev_vectors);
    history.push_back(f1);
    if (dev.empty() || f1 > best_f1) {
      best_f1 = f1;
      best_scorer = model.scorer;
      best_epoch = epoch;
    }
    if (log) {
      log->epochs.push_back({epoch, opt.steps(), loss / static_cast<double>(train.size()), f1, mult,
                             mult.representation / mult.decoder});
    }
  }

  model.scorer = std::move(best_scorer);
  model.epochs = best_epoch;
  if (log) log->best_epoch = best_epoch;
  return model;
}

}  // namespace xdparse
