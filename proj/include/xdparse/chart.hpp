#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xdparse/linear_model.hpp"
#include "xdparse/training.hpp"
#include "xdparse/tree.hpp"
#include "xdparse/vectors.hpp"

namespace xdparse {

/// Span labels for the chart model: index 0 is the empty label (no bracket),
/// the rest are collapsed unary-chain labels in sorted order.
class LabelVocab {
 public:
  static constexpr std::size_t kEmpty = 0;

  LabelVocab() = default;
  explicit LabelVocab(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& operator[](std::size_t i) const { return labels_[i]; }
  std::optional<std::size_t> index_of(const std::string& label) const;
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_ = {""};
  std::map<std::string, std::size_t> index_;
};

/// Score for every (start, end, label) with 0 <= start < end <= n.
class SpanScoreGrid {
 public:
  SpanScoreGrid(int n, std::vector<std::string> labels);

  int n() const { return n_; }
  std::size_t n_labels() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }

  double& at(int start, int end, std::size_t label) { return scores_[offset(start, end) + label]; }
  double at(int start, int end, std::size_t label) const { return scores_[offset(start, end) + label]; }
  std::span<const double> row(int start, int end) const { return {scores_.data() + offset(start, end), labels_.size()}; }
  std::span<double> row(int start, int end) { return {scores_.data() + offset(start, end), labels_.size()}; }

 private:
  std::size_t offset(int start, int end) const {
    return (static_cast<std::size_t>(start) * (n_ + 1) + static_cast<std::size_t>(end)) * labels_.size();
  }

  int n_;
  std::vector<std::string> labels_;
  std::vector<double> scores_;
};

struct ChartModel {
  LabelVocab labels;
  LinearScorer scorer;
  std::uint64_t seed = 0;
  int epochs = 0;

  void save(std::ostream& out) const;
  static ChartModel load(std::istream& in);
};

/// Log-probabilities of every label for every span. `vectors` holds one row
/// per word and is required iff the model has a projection.
SpanScoreGrid score_spans(std::span<const Word> sentence, const ChartModel& model, const Matrix* vectors = nullptr);

struct ChartParse {
  ParseTree tree;
  double score = 0.0;
};

/// Highest-scoring binary tree where every span takes a label or the empty
/// label and the root span takes a real label. Ties go to the lower label
/// index, then the leftmost split. Empty-labeled nodes are elided and
/// collapsed labels expanded in the result.
ChartParse cky_decode(const SpanScoreGrid& grid, std::span<const Word> sentence);

/// Subtracts each span's empty-label score from all of its labels, so a span
/// left unbracketed contributes 0.
void shift_to_empty_baseline(SpanScoreGrid& grid);

/// cky_decode over score_spans after shift_to_empty_baseline.
ChartParse parse_chart(std::span<const Word> sentence, const ChartModel& model, const Matrix* vectors = nullptr);

/// Per-span cross-entropy training. Spans that are constituents of the
/// collapsed gold tree take its label, every other span takes the empty
/// label. Returns the weights from the epoch with the best dev F1.
ChartModel train_chart(const std::vector<ParseTree>& train, const std::vector<ParseTree>& dev,
                       const TrainConfig& config, std::uint64_t seed, TrainingLog* log = nullptr,
                       const VectorTable* train_vectors = nullptr, const VectorTable* dev_vectors = nullptr);

}  // namespace xdparse
