#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/program_options.hpp>

#include "xdparse/eval.hpp"
#include "xdparse/experiment.hpp"
#include "xdparse/parser.hpp"
#include "xdparse/transition.hpp"
#include "xdparse/treebank_io.hpp"
#include "xdparse/vectors.hpp"

namespace po = boost::program_options;
namespace fs = std::filesystem;
using namespace xdparse;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_file(const po::variables_map& vm, const char* flag) {
  if (!vm.count(flag)) throw UsageError(std::string("--") + flag + " is required");
  fs::path p = vm[flag].as<std::string>();
  if (!fs::is_regular_file(p)) throw UsageError(std::string("--") + flag + ": file not found: " + p.string());
}

void require_output(const fs::path& p) {
  auto dir = p.parent_path();
  if (!dir.empty() && !fs::is_directory(dir)) throw UsageError("output directory does not exist: " + dir.string());
}

struct HelpShown {};

po::variables_map parse_flags(const po::options_description& opts, const std::vector<std::string>& args) {
  if (std::find(args.begin(), args.end(), "--help") != args.end()) {
    std::cout << opts;
    throw HelpShown{};
  }
  po::variables_map vm;
  po::store(po::command_line_parser(args).options(opts).run(), vm);
  po::notify(vm);
  return vm;
}

std::vector<ParseTree> load_normalized(const fs::path& path, std::vector<DroppedSentence>& dropped) {
  NormalizationConfig norm;
  auto raw = read_treebank_file(path, norm.root_label);
  auto result = normalize_treebank(raw, norm);
  dropped.insert(dropped.end(), result.dropped.begin(), result.dropped.end());
  return std::move(result.treebank.trees);
}

std::vector<std::vector<std::string>> tokens_of(const std::vector<ParseTree>& trees) {
  std::vector<std::vector<std::string>> out;
  for (const auto& t : trees) out.push_back(forms(leaves(t)));
  return out;
}

VectorTable load_aligned(const fs::path& path, const std::vector<std::vector<std::string>>& tokens,
                         const std::string& corpus) {
  try {
    return load_vector_table(path, tokens);
  } catch (const std::exception& e) {
    throw UsageError("vectors " + path.string() + " do not align with corpus " + corpus + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_train(const std::vector<std::string>& args) {
  po::options_description opts("train options");
  opts.add_options()
      ("parser", po::value<std::string>(), "chart or inorder")
      ("train", po::value<std::string>(), "training treebank")
      ("dev", po::value<std::string>(), "development treebank")
      ("config", po::value<std::string>(), "INI file with a [train] section")
      ("vectors", po::value<std::string>(), "PTVT vectors aligned with --train")
      ("dev-vectors", po::value<std::string>(), "PTVT vectors aligned with --dev")
      ("seed", po::value<std::uint64_t>(), "random seed (default: first configured seed)")
      ("out", po::value<std::string>(), "model file to write; the log goes to OUT.log");

  // Validation: nothing is written until every input has been checked.
  auto vm = parse_flags(opts, args);
  if (!vm.count("parser")) throw UsageError("--parser is required");
  ParserKind kind;
  try {
    kind = parse_parser_kind(vm["parser"].as<std::string>());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  require_file(vm, "train");
  require_file(vm, "dev");
  if (!vm.count("out")) throw UsageError("--out is required");
  fs::path out = vm["out"].as<std::string>();
  require_output(out);
  TrainConfig config;
  if (vm.count("config")) {
    require_file(vm, "config");
    config = read_train_config(vm["config"].as<std::string>());
  }
  if (vm.count("vectors") != vm.count("dev-vectors")) throw UsageError("--vectors and --dev-vectors go together");
  if (vm.count("vectors")) {
    require_file(vm, "vectors");
    require_file(vm, "dev-vectors");
  }
  std::uint64_t seed = vm.count("seed") ? vm["seed"].as<std::uint64_t>() : config.seeds.front();

  std::vector<DroppedSentence> dropped;
  auto train = load_normalized(vm["train"].as<std::string>(), dropped);
  auto dev = load_normalized(vm["dev"].as<std::string>(), dropped);
  if (train.empty()) throw UsageError("training treebank has no usable trees");
  std::optional<VectorTable> train_vec, dev_vec;
  if (vm.count("vectors")) {
    train_vec = load_aligned(vm["vectors"].as<std::string>(), tokens_of(train), vm["train"].as<std::string>());
    dev_vec = load_aligned(vm["dev-vectors"].as<std::string>(), tokens_of(dev), vm["dev"].as<std::string>());
  }

  TrainingLog log;
  Model model = train_model(kind, train, dev, config, seed, &log, train_vec ? &*train_vec : nullptr,
                            dev_vec ? &*dev_vec : nullptr);
  save_model(out, model);
  std::ostringstream log_text;
  log.write(log_text);
  write_text(out.string() + ".log", log_text.str());
  if (!dropped.empty()) {
    std::ostringstream report;
    write_drop_report(report, dropped);
    write_text(out.string() + ".dropped.tsv", report.str());
  }
  std::cerr << "trained " << to_string(kind) << " model, best epoch " << log.best_epoch << ", dev F1 "
            << (log.best_epoch > 0 ? log.epochs[log.best_epoch - 1].dev_f1 : 0.0) << '\n';
  return kOk;
}

int cmd_parse(const std::vector<std::string>& args) {
  po::options_description opts("parse options");
  opts.add_options()
      ("model", po::value<std::string>(), "trained model")
      ("input", po::value<std::string>(), "tagged sentences, word_TAG tokens, one sentence per line")
      ("beam", po::value<int>()->default_value(kDefaultBeamSize), "beam size (in-order models)")
      ("vectors", po::value<std::string>(), "PTVT vectors aligned with --input")
      ("out", po::value<std::string>(), "output treebank (default: stdout)");

  auto vm = parse_flags(opts, args);
  require_file(vm, "model");
  require_file(vm, "input");
  int beam = vm["beam"].as<int>();
  if (beam < 1) throw UsageError("--beam must be >= 1");
  std::optional<fs::path> out;
  if (vm.count("out")) {
    out = vm["out"].as<std::string>();
    require_output(*out);
  }
  Model model = load_model(fs::path(vm["model"].as<std::string>()));
  std::vector<std::vector<Word>> sentences;
  try {
    sentences = read_tagged_sentences(read_file(vm["input"].as<std::string>()));
  } catch (const std::exception& e) {
    throw UsageError(vm["input"].as<std::string>() + ": " + e.what());
  }
  std::optional<VectorTable> vectors;
  if (uses_vectors(model) && !vm.count("vectors")) throw UsageError("this model needs --vectors");
  if (vm.count("vectors")) {
    require_file(vm, "vectors");
    std::vector<std::vector<std::string>> tokens;
    for (const auto& s : sentences) tokens.push_back(forms(s));
    vectors = load_aligned(vm["vectors"].as<std::string>(), tokens, vm["input"].as<std::string>());
  }

  std::ostringstream text;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const Matrix* vec = vectors ? &vectors->sentences[i] : nullptr;
    text << to_bracketed(parse(model, sentences[i], beam, uses_vectors(model) ? vec : nullptr)) << '\n';
  }
  if (out)
    write_text(*out, text.str());
  else
    std::cout << text.str();
  return kOk;
}

void print_score(std::ostream& out, const F1Score& s) {
  auto flags = out.flags();
  out << std::fixed << std::setprecision(6);
  out << "precision\t" << s.precision << '\n'
      << "recall\t" << s.recall << '\n'
      << "f1\t" << s.f1 << '\n';
  out.flags(flags);
  out << "matched\t" << s.matched << '\n'
      << "gold\t" << s.gold_count << '\n'
      << "predicted\t" << s.predicted_count << '\n'
      << "empty\t" << (s.empty ? 1 : 0) << '\n';
}

int cmd_eval(const std::vector<std::string>& args) {
  po::options_description opts("eval options");
  opts.add_options()
      ("gold", po::value<std::string>(), "gold treebank")
      ("pred", po::value<std::string>(), "predicted treebank")
      ("params", po::value<std::string>(), "evaluation parameter file")
      ("min-span", po::value<int>(), "only count brackets at least this long")
      ("exact-match", "also report exact match")
      ("curve-max", po::value<int>(), "print F1 for minimum span lengths 0, step, ... up to this")
      ("curve-step", po::value<int>()->default_value(5), "curve spacing");

  auto vm = parse_flags(opts, args);
  require_file(vm, "gold");
  require_file(vm, "pred");
  EvalConfig config;
  if (vm.count("params")) {
    require_file(vm, "params");
    try {
      config = EvalConfig::parse_params(read_file(vm["params"].as<std::string>()));
    } catch (const std::exception& e) {
      throw UsageError(vm["params"].as<std::string>() + ": " + e.what());
    }
  }
  int min_span = vm.count("min-span") ? vm["min-span"].as<int>() : 0;
  if (min_span < 0) throw UsageError("--min-span must be >= 0");
  if (vm["curve-step"].as<int>() < 1) throw UsageError("--curve-step must be >= 1");

  auto gold_raw = read_treebank_file(vm["gold"].as<std::string>(), config.root_label);
  auto pred_raw = read_treebank_file(vm["pred"].as<std::string>(), config.root_label);
  if (gold_raw.trees.size() != pred_raw.trees.size())
    throw UsageError("sentence count mismatch: gold has " + std::to_string(gold_raw.trees.size()) + ", pred has " +
                     std::to_string(pred_raw.trees.size()));
  std::vector<BracketSet> gold, pred;
  for (std::size_t i = 0; i < gold_raw.trees.size(); ++i) {
    if (gold_raw.trees[i].size() != pred_raw.trees[i].size())
      throw UsageError("sentence " + std::to_string(i + 1) + ": gold and pred differ in length");
    gold.push_back(eval_brackets(gold_raw.trees[i], config));
    pred.push_back(eval_brackets(pred_raw.trees[i], config));
  }

  print_score(std::cout, min_span > 0 ? f1_min_span_length(gold, pred, min_span) : corpus_f1(gold, pred));
  if (vm.count("exact-match"))
    std::cout << "exact_match\t" << std::fixed << std::setprecision(6) << exact_match(gold, pred) << '\n';
  if (vm.count("curve-max")) {
    std::vector<int> lengths;
    for (int l = 0; l <= vm["curve-max"].as<int>(); l += vm["curve-step"].as<int>()) lengths.push_back(l);
    for (const auto& p : span_length_curve(gold, pred, lengths))
      std::cout << "curve\t" << p.min_length << '\t' << std::fixed << std::setprecision(6) << p.score.f1 << '\t'
                << p.score.matched << '\t' << p.score.gold_count << '\t' << p.score.predicted_count << '\n';
  }
  return kOk;
}

int cmd_oracle(const std::vector<std::string>& args) {
  po::options_description opts("oracle options");
  opts.add_options()
      ("treebank", po::value<std::string>(), "treebank to derive action sequences from")
      ("out", po::value<std::string>(), "action-sequence dump, one line per sentence")
      ("unary-limit", po::value<int>()->default_value(4), "longest unary chain the transition system builds");

  auto vm = parse_flags(opts, args);
  require_file(vm, "treebank");
  if (!vm.count("out")) throw UsageError("--out is required");
  fs::path out = vm["out"].as<std::string>();
  require_output(out);
  int limit = vm["unary-limit"].as<int>();
  if (limit < 1) throw UsageError("--unary-limit must be >= 1");

  std::vector<DroppedSentence> dropped;
  auto trees = load_normalized(vm["treebank"].as<std::string>(), dropped);
  for (const auto& d : dropped) std::cout << "dropped\t" << d.index << '\t' << d.reason << '\n';

  std::ostringstream dump;
  std::size_t ok = 0, violations = 0, failures = 0;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto& t = trees[i];
    int chain = max_unary_chain(t);
    if (t.is_leaf() || chain > limit) {
      ++violations;
      std::cout << "violation\t" << i << "\tunary chain of length " << chain << " exceeds limit " << limit << '\n';
      dump << '\n';
      continue;
    }
    auto actions = oracle_actions(t);
    dump << format_actions(actions) << '\n';
    std::size_t internal = spans_of(t).size();
    bool count_ok = actions.size() == t.size() + 2 * internal + 1;
    bool round_trip = false;
    try {
      round_trip = execute(actions, leaves(t), limit) == t;
    } catch (const IllegalAction& e) {
      std::cout << "failure\t" << i << '\t' << e.what() << '\n';
    }
    if (round_trip && count_ok) {
      ++ok;
    } else {
      ++failures;
      std::cout << "failure\t" << i << "\tround trip " << (round_trip ? "ok" : "failed") << ", action count "
                << (count_ok ? "ok" : "wrong") << '\n';
    }
  }
  write_text(out, dump.str());
  std::cout << "sentences\t" << trees.size() << "\nround_trip_ok\t" << ok << "\nviolations\t" << violations
            << "\nfailures\t" << failures << '\n';
  return failures == 0 ? kOk : kRuntimeError;
}

int cmd_run_experiment(const std::vector<std::string>& args) {
  po::options_description opts("run-experiment options");
  opts.add_options()
      ("config", po::value<std::string>(), "experiment config file")
      ("out-dir", po::value<std::string>(), "directory for report files")
      ("concurrent", "train seeds concurrently");

  auto vm = parse_flags(opts, args);
  require_file(vm, "config");
  if (!vm.count("out-dir")) throw UsageError("--out-dir is required");
  fs::path dir = vm["out-dir"].as<std::string>();
  if (!fs::is_directory(dir)) throw UsageError("--out-dir does not exist: " + dir.string());
  ExperimentConfig config;
  ExperimentInputs inputs;
  try {
    config = read_experiment_config(vm["config"].as<std::string>());
    if (vm.count("concurrent")) config.settings.concurrent_seeds = true;
    if (!config.settings.partial_dump) config.settings.partial_dump = dir / "partial.tsv";
    inputs = load_experiment_inputs(config);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  if (!inputs.dropped.empty()) {
    std::ostringstream report;
    write_drop_report(report, inputs.dropped);
    write_text(dir / "dropped.tsv", report.str());
  }
  ExperimentReport report;
  try {
    report = run_experiment(inputs.train, inputs.dev, inputs.corpora, inputs.variants, config.settings);
  } catch (const ExperimentError& e) {
    std::cerr << "xdparse: " << e.what() << "\npartial results in " << config.settings.partial_dump->string() << '\n';
    return kRuntimeError;
  }
  std::ostringstream tsv;
  report.write_tsv(tsv);
  write_text(dir / "report.tsv", tsv.str());
  write_text(dir / "f1.txt", report.format_f1_table());
  write_text(dir / "exact_match.txt", report.format_exact_match_table());
  write_text(dir / "curves.txt", report.format_curves());
  std::cout << report.format_f1_table();
  return kOk;
}

int cmd_report(const std::vector<std::string>& args) {
  po::options_description opts("report options");
  opts.add_options()
      ("f1-table", po::value<std::string>(), "TSV: header 'corpus<TAB>model...', then F1 rows")
      ("reference", po::value<std::string>(), "row that is the reference for each column's error change")
      ("base", po::value<std::string>(), "column that is the reference for each row's error change")
      ("out", po::value<std::string>(), "output file (default: stdout)");

  auto vm = parse_flags(opts, args);
  require_file(vm, "f1-table");
  if (vm.count("reference") == vm.count("base")) throw UsageError("give exactly one of --reference and --base");
  F1Table table;
  try {
    table = read_f1_table(read_file(vm["f1-table"].as<std::string>()));
  } catch (const std::invalid_argument& e) {
    throw UsageError(vm["f1-table"].as<std::string>() + ": " + e.what());
  }
  std::string text;
  if (vm.count("reference")) {
    const auto& name = vm["reference"].as<std::string>();
    auto it = std::find(table.rows.begin(), table.rows.end(), name);
    if (it == table.rows.end()) throw UsageError("no row named '" + name + "'");
    text = format_gap_table(table, static_cast<std::size_t>(it - table.rows.begin()));
  } else {
    const auto& name = vm["base"].as<std::string>();
    auto it = std::find(table.columns.begin(), table.columns.end(), name);
    if (it == table.columns.end()) throw UsageError("no column named '" + name + "'");
    text = format_reduction_table(table, static_cast<std::size_t>(it - table.columns.begin()));
  }
  if (vm.count("out")) {
    fs::path out = vm["out"].as<std::string>();
    require_output(out);
    write_text(out, text);
  } else {
    std::cout << text;
  }
  return kOk;
}

const char* kUsage =
    "usage: xdparse <command> [options]\n"
    "commands:\n"
    "  train           train a chart or in-order parser\n"
    "  parse           parse tagged sentences with a trained model\n"
    "  eval            bracketing F1 between two treebanks\n"
    "  oracle          dump and verify in-order oracle action sequences\n"
    "  run-experiment  multi-seed training and cross-corpus evaluation\n"
    "  report          render F1 tables with relative error columns\n"
    "run 'xdparse <command> --help' for options\n";

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << kUsage;
    return kUsageError;
  }
  std::string command = argv[1];
  std::vector<std::string> args(argv + 2, argv + argc);
  if (command == "--help" || command == "-h" || command == "help") {
    std::cout << kUsage;
    return kOk;
  }
  static const std::map<std::string, int (*)(const std::vector<std::string>&)> commands = {
      {"train", cmd_train}, {"parse", cmd_parse}, {"eval", cmd_eval}, {"oracle", cmd_oracle},
      {"run-experiment", cmd_run_experiment}, {"report", cmd_report}};
  auto it = commands.find(command);
  if (it == commands.end()) {
    std::cerr << "xdparse: unknown command '" << command << "'\n" << kUsage;
    return kUsageError;
  }
  try {
    return it->second(args);
  } catch (const HelpShown&) {
    return kOk;
  } catch (const po::error& e) {
    std::cerr << "xdparse " << command << ": " << e.what() << '\n';
    return kUsageError;
  } catch (const UsageError& e) {
    std::cerr << "xdparse " << command << ": " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    std::cerr << "xdparse " << command << ": " << e.what() << '\n';
    return kUsageError;
  } catch (const TreebankParseError& e) {
    std::cerr << "xdparse " << command << ": " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "xdparse " << command << ": " << e.what() << '\n';
    return kRuntimeError;
  }
}
