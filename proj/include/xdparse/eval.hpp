#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xdparse/tree.hpp"

namespace xdparse {

/// evalb-style comparison parameters.
struct EvalConfig {
  std::string root_label = "TOP";
  /// Bracket labels never counted.
  std::set<std::string> deleted_labels = {"TOP"};
  /// Words with these tags are removed before span indices are computed.
  std::set<std::string> deleted_tags = {"``", "''", ":", ",", ".", "-LRB-", "-RRB-"};
  /// label -> canonical label, applied before comparison.
  std::map<std::string, std::string> label_equivalence = {{"PRT", "ADVP"}};

  /// Parses a parameter file. Lines are "KEY value..." with '#' comments:
  ///   ROOT_LABEL TOP
  ///   DELETE_LABEL TOP
  ///   DELETE_TAG ,
  ///   EQ_LABEL ADVP PRT      (PRT is scored as ADVP)
  /// A file replaces the defaults entirely; ROOT_LABEL is always deleted.
  static EvalConfig parse_params(std::string_view text);

  /// Canonical parameter-file rendering of this configuration.
  std::string to_params() const;
};

/// Sorted multiset of evaluation brackets.
using BracketSet = std::vector<Span>;

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long matched = 0;
  long gold_count = 0;
  long predicted_count = 0;
  /// Both bracket counts are zero, so the percentages carry no information.
  bool empty = false;

  friend bool operator==(const F1Score&, const F1Score&) = default;
};

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

BracketSet eval_brackets(const ParseTree& tree, const EvalConfig& config = {});

/// Size of the multiset intersection of two sorted bracket sets.
long matched_brackets(const BracketSet& gold, const BracketSet& pred);

/// Builds an F1Score from raw counts.
F1Score f1_from_counts(long matched, long gold_count, long predicted_count);

/// Micro-averaged labeled bracketing precision/recall/F1.
F1Score corpus_f1(std::span<const BracketSet> gold, std::span<const BracketSet> pred);

/// Percentage of sentences whose bracket multisets are identical.
double exact_match(std::span<const BracketSet> gold, std::span<const BracketSet> pred);

/// corpus_f1 over brackets of length >= min_length (in the post-deletion index space).
F1Score f1_min_span_length(std::span<const BracketSet> gold, std::span<const BracketSet> pred, int min_length);

/// Relative change in error (100 - F1) from a reference score.
struct GapStat {
  double f1_reference = 0.0;
  double f1_other = 0.0;
  /// Empty when the reference F1 is 100 (zero reference error).
  std::optional<double> delta_err;
};

GapStat delta_err(double f1_reference, double f1_other);
GapStat err_reduction(double f1_base, double f1_augmented);

/// Writes "corpus<TAB>metric<TAB>P<TAB>R<TAB>F1<TAB>matched<TAB>gold<TAB>pred<TAB>empty".
void write_metric_record(std::ostream& out, std::string_view corpus, std::string_view metric, const F1Score& score);
void write_metric_header(std::ostream& out);

}  // namespace xdparse
