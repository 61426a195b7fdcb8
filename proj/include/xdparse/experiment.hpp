#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xdparse/eval.hpp"
#include "xdparse/parser.hpp"
#include "xdparse/training.hpp"
#include "xdparse/treebank_io.hpp"
#include "xdparse/vectors.hpp"

namespace xdparse {

struct Corpus {
  std::string name;
  std::vector<ParseTree> trees;
};

/// One representation option: either the parser's own features alone (no
/// tables) or features plus imported vectors for every corpus.
struct RepresentationVariant {
  std::string name;
  std::optional<VectorTable> train;
  std::optional<VectorTable> dev;
  std::map<std::string, VectorTable> corpora;

  bool has_vectors() const { return train.has_value(); }
};

struct ExperimentSettings {
  std::string name = "experiment";
  ParserKind parser = ParserKind::Chart;
  TrainConfig train;
  EvalConfig eval;
  /// Corpus that is the reference for the relative-error columns.
  std::string in_domain;
  /// Variant that is the reference for error reduction; empty means the first.
  std::string base_variant;
  int beam_size = kDefaultBeamSize;
  std::vector<int> curve_lengths = {0, 5, 10, 15, 20, 25, 30};
  /// Train seeds on separate threads. Results do not depend on this.
  bool concurrent_seeds = false;
  /// Where completed results are written if a seed fails.
  std::optional<std::filesystem::path> partial_dump;
};

struct CurvePoint {
  int min_length = 0;
  F1Score score;
};

struct SeedResult {
  std::string variant;
  std::string corpus;
  std::uint64_t seed = 0;
  F1Score score;
  double exact_match = 0.0;
  std::vector<CurvePoint> curve;
};

struct AggregateRow {
  std::string variant;
  std::string corpus;
  double mean_f1 = 0.0;
  double min_f1 = 0.0;
  double max_f1 = 0.0;
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_exact_match = 0.0;
  /// Relative error increase over the in-domain corpus for the same variant.
  std::optional<double> delta_err;
  /// Relative error change over the base variant on the same corpus.
  std::optional<double> err_reduction;
  /// (L, mean F1 over seeds).
  std::vector<std::pair<int, double>> curve;
};

struct ExperimentReport {
  std::string name;
  ParserKind parser = ParserKind::Chart;
  std::string in_domain;
  std::string base_variant;
  std::vector<std::string> variants;
  std::vector<std::string> corpora;
  std::vector<std::uint64_t> seeds;
  std::vector<SeedResult> results;
  std::vector<AggregateRow> aggregates;

  const AggregateRow& aggregate(std::string_view variant, std::string_view corpus) const;

  /// Machine-readable results, one row per (record, variant, corpus, seed, L).
  /// The header line documents the columns.
  void write_tsv(std::ostream& out) const;
  /// Mean F1 with relative-error columns, plus error reduction when there is
  /// more than one variant.
  std::string format_f1_table() const;
  std::string format_exact_match_table() const;
  std::string format_curves() const;
};

/// A seed failed to train or evaluate. Results completed before the failure
/// are kept.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(const std::string& what, ExperimentReport partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const ExperimentReport& partial() const { return partial_; }

 private:
  ExperimentReport partial_;
};

/// Trains one model per (variant, seed) and evaluates it on every corpus.
ExperimentReport run_experiment(const std::vector<ParseTree>& train, const std::vector<ParseTree>& dev,
                                const std::vector<Corpus>& corpora, const std::vector<RepresentationVariant>& variants,
                                const ExperimentSettings& settings);

/// F1 at each minimum span length.
std::vector<CurvePoint> span_length_curve(std::span<const BracketSet> gold, std::span<const BracketSet> pred,
                                          std::span<const int> lengths);

/// F1 scores under named columns (models) and rows (corpora).
struct F1Table {
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<double>> f1;  // [row][column]
};

/// Header "corpus<TAB>column..." then one row of F1 values per corpus.
F1Table read_f1_table(std::string_view tsv);

/// F1 and relative error change for every column, relative to reference_row.
std::string format_gap_table(const F1Table& table, std::size_t reference_row);
/// F1 for every column and, for each other column, relative error change
/// against base_column on the same row.
std::string format_reduction_table(const F1Table& table, std::size_t base_column);

/// Fixed-point rendering, ties rounded away from zero.
std::string format_half_up(double value, int decimals);
/// "+54.5%" style; "n/a" when undefined.
std::string format_change(const std::optional<double>& change);

/// Files named by an experiment config file. Relative paths are resolved
/// against the config file's directory.
struct ExperimentConfig {
  ExperimentSettings settings;
  NormalizationConfig normalization;
  std::filesystem::path train;
  std::filesystem::path dev;
  std::vector<std::pair<std::string, std::filesystem::path>> corpora;

  struct VariantFiles {
    std::string name;
    std::optional<std::filesystem::path> train;
    std::optional<std::filesystem::path> dev;
    std::map<std::string, std::filesystem::path> corpora;
  };
  std::vector<VariantFiles> variants;

  /// Checks cross references and that every named file exists.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// INI-style config:
///
///   [experiment]  name, parser, train, dev, in_domain, base_variant,
///                 beam_size, curve_step, curve_max, params, concurrent_seeds
///   [corpora]     NAME = treebank path, in report order
///   [variant:V]   train, dev, NAME = vector table path for each corpus
///   [train]       TrainConfig fields; seeds as a space-separated list
///   [normalization] strip_function_tags, remove_empty_elements, root_label
ExperimentConfig parse_experiment_config(std::istream& in, const std::filesystem::path& base_dir);
ExperimentConfig read_experiment_config(const std::filesystem::path& path);

/// The [train] section of an INI file; missing keys keep their defaults.
TrainConfig parse_train_config(std::istream& in);
TrainConfig read_train_config(const std::filesystem::path& path);

struct ExperimentInputs {
  std::vector<ParseTree> train;
  std::vector<ParseTree> dev;
  std::vector<Corpus> corpora;
  std::vector<RepresentationVariant> variants;
  std::vector<DroppedSentence> dropped;
};

/// Reads and normalizes every treebank and loads each vector table against
/// the corpus it belongs to. Errors name the offending corpus.
ExperimentInputs load_experiment_inputs(const ExperimentConfig& config);

}  // namespace xdparse
