#include "xdparse/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace xdparse {

EvalConfig EvalConfig::parse_params(std::string_view text) {
  EvalConfig cfg;
  cfg.deleted_labels.clear();
  cfg.deleted_tags.clear();
  cfg.label_equivalence.clear();

  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string key;
    if (!(fields >> key)) continue;
    std::vector<std::string> values;
    for (std::string v; fields >> v;) values.push_back(v);

    auto fail = [&](const std::string& why) {
      throw std::runtime_error("eval params line " + std::to_string(line_no) + ": " + why);
    };
    if (key == "ROOT_LABEL") {
      if (values.size() != 1) fail("ROOT_LABEL takes one value");
      cfg.root_label = values[0];
    } else if (key == "DELETE_LABEL") {
      if (values.empty()) fail("DELETE_LABEL needs a value");
      cfg.deleted_labels.insert(values.begin(), values.end());
    } else if (key == "DELETE_TAG") {
      if (values.empty()) fail("DELETE_TAG needs a value");
      cfg.deleted_tags.insert(values.begin(), values.end());
    } else if (key == "EQ_LABEL") {
      if (values.size() < 2) fail("EQ_LABEL needs a canonical label and at least one alias");
      for (std::size_t i = 1; i < values.size(); ++i) cfg.label_equivalence[values[i]] = values[0];
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  cfg.deleted_labels.insert(cfg.root_label);
  return cfg;
}

std::string EvalConfig::to_params() const {
  std::ostringstream out;
  out << "ROOT_LABEL " << root_label << '\n';
  for (const auto& l : deleted_labels) out << "DELETE_LABEL " << l << '\n';
  for (const auto& t : deleted_tags) out << "DELETE_TAG " << t << '\n';
  for (const auto& [alias, canon] : label_equivalence) out << "EQ_LABEL " << canon << ' ' << alias << '\n';
  return out.str();
}

namespace {

// Returns the next kept-word index after this subtree.
int collect(const ParseTree& t, int start, const EvalConfig& cfg, BracketSet& out) {
  if (t.is_leaf()) return cfg.deleted_tags.count(t.label()) ? start : start + 1;
  int end = start;
  std::size_t slot = out.size();
  out.push_back({});
  for (const auto& c : t.children()) end = collect(c, end, cfg, out);
  Span& s = out[slot];
  s.start = start;
  s.end = end;
  s.label = t.label();
  if (auto it = cfg.label_equivalence.find(s.label); it != cfg.label_equivalence.end()) s.label = it->second;
  return end;
}

void check_aligned(std::size_t a, std::size_t b) {
  if (a != b)
    throw AlignmentError("gold and predicted corpora differ in length (" + std::to_string(a) + " vs " +
                         std::to_string(b) + " sentences)");
}

BracketSet filter_min_length(const BracketSet& in, int min_length) {
  BracketSet out;
  for (const auto& s : in)
    if (s.length() >= min_length) out.push_back(s);
  return out;
}

}  // namespace

BracketSet eval_brackets(const ParseTree& tree, const EvalConfig& config) {
  BracketSet raw;
  collect(tree, 0, config, raw);
  BracketSet out;
  out.reserve(raw.size());
  for (auto& s : raw) {
    if (s.length() <= 0) continue;
    if (config.deleted_labels.count(s.label)) continue;
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

long matched_brackets(const BracketSet& gold, const BracketSet& pred) {
  long matched = 0;
  auto g = gold.begin();
  auto p = pred.begin();
  while (g != gold.end() && p != pred.end()) {
    if (*g < *p) {
      ++g;
    } else if (*p < *g) {
      ++p;
    } else {
      ++matched;
      ++g;
      ++p;
    }
  }
  return matched;
}

F1Score f1_from_counts(long matched, long gold_count, long predicted_count) {
  F1Score s;
  s.matched = matched;
  s.gold_count = gold_count;
  s.predicted_count = predicted_count;
  s.empty = gold_count == 0 && predicted_count == 0;
  s.precision = predicted_count > 0 ? 100.0 * static_cast<double>(matched) / static_cast<double>(predicted_count) : 0.0;
  s.recall = gold_count > 0 ? 100.0 * static_cast<double>(matched) / static_cast<double>(gold_count) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

F1Score corpus_f1(std::span<const BracketSet> gold, std::span<const BracketSet> pred) {
  return f1_min_span_length(gold, pred, 0);
}

double exact_match(std::span<const BracketSet> gold, std::span<const BracketSet> pred) {
  check_aligned(gold.size(), pred.size());
  if (gold.empty()) return 0.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i] == pred[i]) ++same;
  return 100.0 * static_cast<double>(same) / static_cast<double>(gold.size());
}

F1Score f1_min_span_length(std::span<const BracketSet> gold, std::span<const BracketSet> pred, int min_length) {
  check_aligned(gold.size(), pred.size());
  long matched = 0, n_gold = 0, n_pred = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (min_length <= 0) {
      matched += matched_brackets(gold[i], pred[i]);
      n_gold += static_cast<long>(gold[i].size());
      n_pred += static_cast<long>(pred[i].size());
    } else {
      BracketSet g = filter_min_length(gold[i], min_length);
      BracketSet p = filter_min_length(pred[i], min_length);
      matched += matched_brackets(g, p);
      n_gold += static_cast<long>(g.size());
      n_pred += static_cast<long>(p.size());
    }
  }
  return f1_from_counts(matched, n_gold, n_pred);
}

GapStat delta_err(double f1_reference, double f1_other) {
  GapStat g{f1_reference, f1_other, std::nullopt};
  double ref_err = 100.0 - f1_reference;
  if (ref_err > 0.0) g.delta_err = 100.0 * ((100.0 - f1_other) - ref_err) / ref_err;
  return g;
}

GapStat err_reduction(double f1_base, double f1_augmented) { return delta_err(f1_base, f1_augmented); }

void write_metric_header(std::ostream& out) {
  out << "corpus\tmetric\tprecision\trecall\tf1\tmatched\tgold\tpredicted\tempty\n";
}

void write_metric_record(std::ostream& out, std::string_view corpus, std::string_view metric, const F1Score& s) {
  auto old = out.flags();
  out << corpus << '\t' << metric << '\t' << std::fixed << std::setprecision(4) << s.precision << '\t' << s.recall
      << '\t' << s.f1 << '\t' << s.matched << '\t' << s.gold_count << '\t' << s.predicted_count << '\t'
      << (s.empty ? 1 : 0) << '\n';
  out.flags(old);
}

}  // namespace xdparse
