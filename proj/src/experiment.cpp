#include "xdparse/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace xdparse {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string opt_fixed6(const std::optional<double>& v) { return v ? fixed6(*v) : "-"; }

std::size_t index_in(const std::vector<std::string>& names, std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  return static_cast<std::size_t>(it - names.begin());
}

// Left-aligned first column, right-aligned others.
std::string render_table(const std::string& title, const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());

  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out << "  ";
      std::string pad(width[c] - cells[c].size(), ' ');
      out << (c == 0 ? cells[c] + pad : pad + cells[c]);
    }
    out << '\n';
  };
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  if (!title.empty()) out << title << '\n';
  line(header);
  out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
  for (const auto& r : rows) line(r);
  return out.str();
}

struct Job {
  std::size_t variant;
  std::uint64_t seed;
};

std::vector<SeedResult> run_job(const Job& job, const std::vector<ParseTree>& train, const std::vector<ParseTree>& dev,
                                const std::vector<Corpus>& corpora, const RepresentationVariant& variant,
                                const ExperimentSettings& settings) {
  const VectorTable* train_vec = variant.train ? &*variant.train : nullptr;
  const VectorTable* dev_vec = variant.dev ? &*variant.dev : nullptr;
  Model model = train_model(settings.parser, train, dev, settings.train, job.seed, nullptr, train_vec, dev_vec);

  std::vector<SeedResult> out;
  for (const auto& corpus : corpora) {
    const VectorTable* vt = variant.has_vectors() ? &variant.corpora.at(corpus.name) : nullptr;
    std::vector<BracketSet> gold, pred;
    gold.reserve(corpus.trees.size());
    pred.reserve(corpus.trees.size());
    for (std::size_t i = 0; i < corpus.trees.size(); ++i) {
      auto words = leaves(corpus.trees[i]);
      const Matrix* vec = vt ? &vt->sentences[i] : nullptr;
      gold.push_back(eval_brackets(corpus.trees[i], settings.eval));
      pred.push_back(eval_brackets(parse(model, words, settings.beam_size, vec), settings.eval));
    }
    SeedResult r;
    r.variant = variant.name;
    r.corpus = corpus.name;
    r.seed = job.seed;
    r.score = corpus_f1(gold, pred);
    r.exact_match = exact_match(gold, pred);
    r.curve = span_length_curve(gold, pred, settings.curve_lengths);
    out.push_back(std::move(r));
  }
  return out;
}

ExperimentReport build_report(const ExperimentSettings& settings, const std::vector<std::string>& variants,
                              const std::vector<std::string>& corpora, std::vector<SeedResult> results) {
  ExperimentReport report;
  report.name = settings.name;
  report.parser = settings.parser;
  report.in_domain = settings.in_domain;
  report.base_variant = settings.base_variant.empty() ? variants.front() : settings.base_variant;
  report.variants = variants;
  report.corpora = corpora;
  report.seeds = settings.train.seeds;
  report.results = std::move(results);

  for (const auto& v : variants) {
    for (const auto& c : corpora) {
      std::vector<const SeedResult*> rs;
      for (const auto& r : report.results)
        if (r.variant == v && r.corpus == c) rs.push_back(&r);
      if (rs.empty()) continue;
      AggregateRow row;
      row.variant = v;
      row.corpus = c;
      row.min_f1 = rs.front()->score.f1;
      row.max_f1 = rs.front()->score.f1;
      const double n = static_cast<double>(rs.size());
      for (const auto* r : rs) {
        row.mean_f1 += r->score.f1;
        row.mean_precision += r->score.precision;
        row.mean_recall += r->score.recall;
        row.mean_exact_match += r->exact_match;
        row.min_f1 = std::min(row.min_f1, r->score.f1);
        row.max_f1 = std::max(row.max_f1, r->score.f1);
      }
      row.mean_f1 /= n;
      row.mean_precision /= n;
      row.mean_recall /= n;
      row.mean_exact_match /= n;
      for (std::size_t k = 0; k < rs.front()->curve.size(); ++k) {
        double sum = 0.0;
        for (const auto* r : rs) sum += r->curve[k].score.f1;
        row.curve.emplace_back(rs.front()->curve[k].min_length, sum / n);
      }
      report.aggregates.push_back(std::move(row));
    }
  }

  auto find = [&](const std::string& v, const std::string& c) -> const AggregateRow* {
    for (const auto& a : report.aggregates)
      if (a.variant == v && a.corpus == c) return &a;
    return nullptr;
  };
  for (auto& a : report.aggregates) {
    if (const auto* ref = find(a.variant, report.in_domain)) a.delta_err = delta_err(ref->mean_f1, a.mean_f1).delta_err;
    if (a.variant != report.base_variant)
      if (const auto* base = find(report.base_variant, a.corpus))
        a.err_reduction = err_reduction(base->mean_f1, a.mean_f1).delta_err;
  }
  return report;
}

void write_partial(const ExperimentSettings& settings, const ExperimentReport& partial) {
  if (!settings.partial_dump) return;
  std::ofstream out(*settings.partial_dump);
  if (out) partial.write_tsv(out);
}

}  // namespace

std::vector<CurvePoint> span_length_curve(std::span<const BracketSet> gold, std::span<const BracketSet> pred,
                                          std::span<const int> lengths) {
  std::vector<CurvePoint> out;
  out.reserve(lengths.size());
  for (int l : lengths) out.push_back({l, f1_min_span_length(gold, pred, l)});
  return out;
}

ExperimentReport run_experiment(const std::vector<ParseTree>& train, const std::vector<ParseTree>& dev,
                                const std::vector<Corpus>& corpora, const std::vector<RepresentationVariant>& variants_in,
                                const ExperimentSettings& settings) {
  settings.train.validate();
  if (corpora.empty()) throw std::invalid_argument("experiment needs at least one evaluation corpus");
  if (settings.beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");

  std::vector<std::string> corpus_names;
  for (const auto& c : corpora) {
    if (std::find(corpus_names.begin(), corpus_names.end(), c.name) != corpus_names.end())
      throw std::invalid_argument("duplicate corpus name '" + c.name + "'");
    if (c.trees.empty()) throw std::invalid_argument("corpus '" + c.name + "' is empty");
    corpus_names.push_back(c.name);
  }
  if (index_in(corpus_names, settings.in_domain) == corpus_names.size())
    throw std::invalid_argument("in-domain corpus '" + settings.in_domain + "' is not among the evaluation corpora");

  std::vector<RepresentationVariant> default_variant;
  if (variants_in.empty()) default_variant.push_back({"base", {}, {}, {}});
  const auto& variants = variants_in.empty() ? default_variant : variants_in;
  std::vector<std::string> variant_names;
  for (const auto& v : variants) {
    if (std::find(variant_names.begin(), variant_names.end(), v.name) != variant_names.end())
      throw std::invalid_argument("duplicate variant name '" + v.name + "'");
    variant_names.push_back(v.name);
    if (v.train.has_value() != v.dev.has_value())
      throw std::invalid_argument("variant '" + v.name + "' needs vectors for both train and dev");
    if (!v.has_vectors()) continue;
    if (v.train->sentences.size() != train.size())
      throw std::invalid_argument("variant '" + v.name + "': train vectors do not match the training corpus");
    if (v.dev->sentences.size() != dev.size())
      throw std::invalid_argument("variant '" + v.name + "': dev vectors do not match the dev corpus");
    for (const auto& c : corpora) {
      auto it = v.corpora.find(c.name);
      if (it == v.corpora.end())
        throw std::invalid_argument("variant '" + v.name + "' has no vectors for corpus '" + c.name + "'");
      if (it->second.sentences.size() != c.trees.size())
        throw std::invalid_argument("variant '" + v.name + "': vectors do not match corpus '" + c.name + "'");
    }
  }
  if (!settings.base_variant.empty() && index_in(variant_names, settings.base_variant) == variant_names.size())
    throw std::invalid_argument("base variant '" + settings.base_variant + "' is not defined");

  std::vector<Job> jobs;
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (auto seed : settings.train.seeds) jobs.push_back({v, seed});

  std::vector<SeedResult> done;
  auto fail = [&](const Job& job, const std::string& what) {
    auto partial = build_report(settings, variant_names, corpus_names, done);
    write_partial(settings, partial);
    throw ExperimentError("variant '" + variants[job.variant].name + "' seed " + std::to_string(job.seed) +
                              " failed: " + what,
                          std::move(partial));
  };

  if (settings.concurrent_seeds) {
    std::vector<std::future<std::vector<SeedResult>>> futures;
    for (const auto& job : jobs)
      futures.push_back(std::async(std::launch::async, run_job, job, std::cref(train), std::cref(dev),
                                   std::cref(corpora), std::cref(variants[job.variant]), std::cref(settings)));
    std::optional<std::pair<Job, std::string>> first_failure;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      try {
        auto rs = futures[j].get();
        done.insert(done.end(), rs.begin(), rs.end());
      } catch (const std::exception& e) {
        if (!first_failure) first_failure.emplace(jobs[j], e.what());
      }
    }
    if (first_failure) fail(first_failure->first, first_failure->second);
  } else {
    for (const auto& job : jobs) {
      try {
        auto rs = run_job(job, train, dev, corpora, variants[job.variant], settings);
        done.insert(done.end(), rs.begin(), rs.end());
      } catch (const std::exception& e) {
        fail(job, e.what());
      }
    }
  }
  return build_report(settings, variant_names, corpus_names, std::move(done));
}

const AggregateRow& ExperimentReport::aggregate(std::string_view variant, std::string_view corpus) const {
  for (const auto& a : aggregates)
    if (a.variant == variant && a.corpus == corpus) return a;
  throw std::out_of_range("no aggregate for variant '" + std::string(variant) + "' on corpus '" +
                          std::string(corpus) + "'");
}

void ExperimentReport::write_tsv(std::ostream& out) const {
  out << "record\tvariant\tcorpus\tseed\tmin_span\tprecision\trecall\tf1\tf1_min\tf1_max\tmatched\tgold\tpredicted"
         "\texact_match\tdelta_err\terr_reduction\n";
  for (const auto& r : results) {
    out << "seed\t" << r.variant << '\t' << r.corpus << '\t' << r.seed << "\t-\t" << fixed6(r.score.precision) << '\t'
        << fixed6(r.score.recall) << '\t' << fixed6(r.score.f1) << "\t-\t-\t" << r.score.matched << '\t'
        << r.score.gold_count << '\t' << r.score.predicted_count << '\t' << fixed6(r.exact_match) << "\t-\t-\n";
    for (const auto& p : r.curve)
      out << "curve\t" << r.variant << '\t' << r.corpus << '\t' << r.seed << '\t' << p.min_length << '\t'
          << fixed6(p.score.precision) << '\t' << fixed6(p.score.recall) << '\t' << fixed6(p.score.f1) << "\t-\t-\t"
          << p.score.matched << '\t' << p.score.gold_count << '\t' << p.score.predicted_count << "\t-\t-\t-\n";
  }
  for (const auto& a : aggregates)
    out << "mean\t" << a.variant << '\t' << a.corpus << "\t-\t-\t" << fixed6(a.mean_precision) << '\t'
        << fixed6(a.mean_recall) << '\t' << fixed6(a.mean_f1) << '\t' << fixed6(a.min_f1) << '\t' << fixed6(a.max_f1)
        << "\t-\t-\t-\t" << fixed6(a.mean_exact_match) << '\t' << opt_fixed6(a.delta_err) << '\t'
        << opt_fixed6(a.err_reduction) << '\n';
}

std::string ExperimentReport::format_f1_table() const {
  F1Table t;
  t.columns = variants;
  for (const auto& c : corpora) {
    std::vector<double> row;
    for (const auto& v : variants) row.push_back(aggregate(v, c).mean_f1);
    t.rows.push_back(c);
    t.f1.push_back(std::move(row));
  }
  std::string out = name + " (" + to_string(parser) + "): mean F1 over " + std::to_string(seeds.size()) +
                    " seed(s), error change relative to " + in_domain + "\n";
  out += format_gap_table(t, index_in(corpora, in_domain));
  if (variants.size() > 1) {
    out += "\nerror change relative to variant " + base_variant + "\n";
    out += format_reduction_table(t, index_in(variants, base_variant));
  }
  return out;
}

std::string ExperimentReport::format_exact_match_table() const {
  std::vector<std::string> header = {"corpus"};
  for (const auto& v : variants) header.push_back(v + " EM");
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : corpora) {
    std::vector<std::string> row = {c};
    for (const auto& v : variants) row.push_back(format_half_up(aggregate(v, c).mean_exact_match, 2));
    rows.push_back(std::move(row));
  }
  return render_table(name + " (" + to_string(parser) + "): mean exact match", header, rows);
}

std::string ExperimentReport::format_curves() const {
  std::string out;
  for (const auto& v : variants) {
    std::vector<std::string> header = {"min span"};
    for (const auto& c : corpora) header.push_back(c);
    std::vector<std::vector<std::string>> rows;
    const auto& first = aggregate(v, corpora.front());
    for (std::size_t k = 0; k < first.curve.size(); ++k) {
      std::vector<std::string> row = {std::to_string(first.curve[k].first)};
      for (const auto& c : corpora) row.push_back(format_half_up(aggregate(v, c).curve[k].second, 2));
      rows.push_back(std::move(row));
    }
    if (!out.empty()) out += '\n';
    out += render_table(name + " variant " + v + ": mean F1 by minimum span length", header, rows);
  }
  return out;
}

std::string format_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  double mag = std::floor(std::abs(value) * scale + 0.5 + 1e-9);
  if (mag == 0.0) value = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%.*f", value < 0 ? "-" : "", decimals, mag / scale);
  return buf;
}

std::string format_change(const std::optional<double>& change) {
  if (!change) return "n/a";
  std::string s = format_half_up(*change, 1);
  if (s.front() != '-') s.insert(s.begin(), '+');
  return s + "%";
}

F1Table read_f1_table(std::string_view tsv) {
  F1Table t;
  std::istringstream in{std::string(tsv)};
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, '\t')) cells.push_back(cell);
    return cells;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto cells = split(line);
    if (!have_header) {
      if (cells.size() < 2) throw std::invalid_argument("F1 table header needs at least one column");
      t.columns.assign(cells.begin() + 1, cells.end());
      have_header = true;
      continue;
    }
    if (cells.size() != t.columns.size() + 1)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(t.columns.size() + 1) + " fields");
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cells[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cells[c].size() || used == 0)
        throw std::invalid_argument("line " + std::to_string(lineno) + ": bad F1 value '" + cells[c] + "'");
      row.push_back(v);
    }
    t.rows.push_back(cells[0]);
    t.f1.push_back(std::move(row));
  }
  if (!have_header) throw std::invalid_argument("F1 table is empty");
  return t;
}

std::string format_gap_table(const F1Table& table, std::size_t reference_row) {
  if (reference_row >= table.rows.size()) throw std::invalid_argument("reference row out of range");
  std::vector<std::string> header = {"corpus"};
  for (const auto& c : table.columns) {
    header.push_back(c + " F1");
    header.push_back(c + " dErr");
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<std::string> row = {table.rows[r]};
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      row.push_back(format_half_up(table.f1[r][c], 2));
      row.push_back(format_change(delta_err(table.f1[reference_row][c], table.f1[r][c]).delta_err));
    }
    rows.push_back(std::move(row));
  }
  return render_table("", header, rows);
}

std::string format_reduction_table(const F1Table& table, std::size_t base_column) {
  if (base_column >= table.columns.size()) throw std::invalid_argument("base column out of range");
  std::vector<std::string> header = {"corpus"};
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    header.push_back(table.columns[c] + " F1");
    if (c != base_column) header.push_back(table.columns[c] + " dErr");
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<std::string> row = {table.rows[r]};
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      row.push_back(format_half_up(table.f1[r][c], 2));
      if (c != base_column)
        row.push_back(format_change(err_reduction(table.f1[r][base_column], table.f1[r][c]).delta_err));
    }
    rows.push_back(std::move(row));
  }
  return render_table("", header, rows);
}

// ---------------------------------------------------------------------------
// Config files

namespace {

using Entries = std::vector<std::pair<std::string, std::string>>;

struct IniFile {
  std::vector<std::pair<std::string, Entries>> sections;

  const Entries* section(std::string_view name) const {
    for (const auto& [n, e] : sections)
      if (n == name) return &e;
    return nullptr;
  }
};

IniFile read_ini(std::istream& in) {
  std::stringstream text;
  text << in.rdbuf();
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(text, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, sec] : pt)
    if (sec.empty() && !sec.data().empty()) throw ConfigError("config key '" + name + "' is outside any section");

  // The ptree drops sections without keys, so take names and order from the
  // headers themselves.
  IniFile ini;
  text.clear();
  text.seekg(0);
  for (std::string line; std::getline(text, line);) {
    auto first = line.find_first_not_of(" \t");
    auto last = line.find_last_not_of(" \t\r");
    if (first == std::string::npos || line[first] != '[' || line[last] != ']') continue;
    std::string name = line.substr(first + 1, last - first - 1);
    name.erase(0, name.find_first_not_of(" \t"));
    name.erase(name.find_last_not_of(" \t") + 1);
    Entries entries;
    if (auto sec = pt.get_child_optional(boost::property_tree::ptree::path_type(name, '\0')))
      for (const auto& [k, v] : *sec) entries.emplace_back(k, v.data());
    ini.sections.emplace_back(name, std::move(entries));
  }
  return ini;
}

long to_long(const std::string& section, const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size())
    throw ConfigError("[" + section + "] " + key + ": expected an integer, got '" + value + "'");
  return v;
}

double to_double(const std::string& section, const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size())
    throw ConfigError("[" + section + "] " + key + ": expected a number, got '" + value + "'");
  return v;
}

bool to_bool(const std::string& section, const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("[" + section + "] " + key + ": expected true or false, got '" + value + "'");
}

void apply_train_section(const Entries& entries, TrainConfig& cfg) {
  const std::string s = "train";
  for (const auto& [k, v] : entries) {
    if (k == "batch_size") {
      long n = to_long(s, k, v);
      if (n < 1) throw ConfigError("[train] batch_size must be >= 1");
      cfg.batch_size = static_cast<std::size_t>(n);
    } else if (k == "beta1") {
      cfg.beta1 = to_double(s, k, v);
    } else if (k == "beta2") {
      cfg.beta2 = to_double(s, k, v);
    } else if (k == "epsilon") {
      cfg.epsilon = to_double(s, k, v);
    } else if (k == "decoder_lr") {
      cfg.decoder_lr = to_double(s, k, v);
    } else if (k == "repr_lr") {
      cfg.repr_lr = to_double(s, k, v);
    } else if (k == "patience") {
      cfg.patience = static_cast<int>(to_long(s, k, v));
    } else if (k == "decay") {
      cfg.decay = to_double(s, k, v);
    } else if (k == "warmup_updates") {
      cfg.warmup_updates = to_long(s, k, v);
    } else if (k == "max_epochs") {
      cfg.max_epochs = static_cast<int>(to_long(s, k, v));
    } else if (k == "hash_bits") {
      cfg.hash_bits = static_cast<int>(to_long(s, k, v));
    } else if (k == "projection_dim") {
      long n = to_long(s, k, v);
      if (n < 1) throw ConfigError("[train] projection_dim must be >= 1");
      cfg.projection_dim = static_cast<std::size_t>(n);
    } else if (k == "unary_limit") {
      cfg.unary_limit = static_cast<int>(to_long(s, k, v));
    } else if (k == "dev_beam_size") {
      cfg.dev_beam_size = static_cast<int>(to_long(s, k, v));
    } else if (k == "seeds") {
      cfg.seeds.clear();
      std::istringstream in(v);
      std::string tok;
      while (in >> tok) {
        long n = to_long(s, k, tok);
        if (n < 0) throw ConfigError("[train] seeds must be non-negative");
        cfg.seeds.push_back(static_cast<std::uint64_t>(n));
      }
    } else {
      throw ConfigError("[train] unknown key '" + k + "'");
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

TrainConfig parse_train_config(std::istream& in) {
  IniFile ini = read_ini(in);
  TrainConfig cfg;
  if (const auto* sec = ini.section("train")) apply_train_section(*sec, cfg);
  return cfg;
}

TrainConfig read_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_train_config(in);
}

ExperimentConfig parse_experiment_config(std::istream& in, const std::filesystem::path& base_dir) {
  IniFile ini = read_ini(in);
  ExperimentConfig cfg;
  auto& st = cfg.settings;

  const Entries* exp = ini.section("experiment");
  if (!exp) throw ConfigError("config has no [experiment] section");
  int curve_step = 5, curve_max = 30;
  bool have_parser = false;
  const std::string s = "experiment";
  for (const auto& [k, v] : *exp) {
    if (k == "name") {
      st.name = v;
    } else if (k == "parser") {
      try {
        st.parser = parse_parser_kind(v);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("[experiment] ") + e.what());
      }
      have_parser = true;
    } else if (k == "train") {
      cfg.train = resolve(base_dir, v);
    } else if (k == "dev") {
      cfg.dev = resolve(base_dir, v);
    } else if (k == "in_domain") {
      st.in_domain = v;
    } else if (k == "base_variant") {
      st.base_variant = v;
    } else if (k == "beam_size") {
      st.beam_size = static_cast<int>(to_long(s, k, v));
    } else if (k == "curve_step") {
      curve_step = static_cast<int>(to_long(s, k, v));
    } else if (k == "curve_max") {
      curve_max = static_cast<int>(to_long(s, k, v));
    } else if (k == "params") {
      auto path = resolve(base_dir, v);
      if (!std::filesystem::is_regular_file(path)) throw ConfigError("evaluation params file not found: " + path.string());
      st.eval = EvalConfig::parse_params(read_file(path));
    } else if (k == "concurrent_seeds") {
      st.concurrent_seeds = to_bool(s, k, v);
    } else if (k == "partial_dump") {
      st.partial_dump = resolve(base_dir, v);
    } else {
      throw ConfigError("[experiment] unknown key '" + k + "'");
    }
  }
  if (!have_parser) throw ConfigError("[experiment] parser is required");
  if (cfg.train.empty() || cfg.dev.empty()) throw ConfigError("[experiment] train and dev are required");
  if (st.in_domain.empty()) throw ConfigError("[experiment] in_domain is required");
  if (st.beam_size < 1) throw ConfigError("[experiment] beam_size must be >= 1");
  if (curve_step < 1 || curve_max < 0) throw ConfigError("[experiment] curve_step must be >= 1 and curve_max >= 0");
  st.curve_lengths.clear();
  for (int l = 0; l <= curve_max; l += curve_step) st.curve_lengths.push_back(l);

  const Entries* corpora = ini.section("corpora");
  if (!corpora || corpora->empty()) throw ConfigError("config has no [corpora] entries");
  for (const auto& [k, v] : *corpora) cfg.corpora.emplace_back(k, resolve(base_dir, v));

  for (const auto& [name, entries] : ini.sections) {
    if (name.rfind("variant:", 0) != 0) continue;
    ExperimentConfig::VariantFiles vf;
    vf.name = name.substr(8);
    if (vf.name.empty()) throw ConfigError("variant section needs a name: [variant:NAME]");
    for (const auto& [k, v] : entries) {
      if (k == "train")
        vf.train = resolve(base_dir, v);
      else if (k == "dev")
        vf.dev = resolve(base_dir, v);
      else
        vf.corpora[k] = resolve(base_dir, v);
    }
    cfg.variants.push_back(std::move(vf));
  }
  if (cfg.variants.empty()) cfg.variants.push_back({"base", {}, {}, {}});

  if (const auto* sec = ini.section("train")) apply_train_section(*sec, st.train);

  if (const auto* sec = ini.section("normalization")) {
    for (const auto& [k, v] : *sec) {
      if (k == "strip_function_tags")
        cfg.normalization.strip_function_tags = to_bool("normalization", k, v);
      else if (k == "remove_empty_elements")
        cfg.normalization.remove_empty_elements = to_bool("normalization", k, v);
      else if (k == "root_label")
        cfg.normalization.root_label = v;
      else
        throw ConfigError("[normalization] unknown key '" + k + "'");
    }
  }

  for (const auto& [name, _] : ini.sections) {
    static const std::set<std::string> known = {"experiment", "corpora", "train", "normalization"};
    if (!known.count(name) && name.rfind("variant:", 0) != 0) throw ConfigError("unknown config section [" + name + "]");
  }
  return cfg;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  auto dir = path.parent_path();
  return parse_experiment_config(in, dir.empty() ? std::filesystem::path(".") : dir);
}

void ExperimentConfig::validate() const {
  auto require_file = [](const std::filesystem::path& p, const std::string& what) {
    if (!std::filesystem::is_regular_file(p)) throw ConfigError(what + " not found: " + p.string());
  };
  require_file(train, "training treebank");
  require_file(dev, "dev treebank");
  std::set<std::string> names;
  for (const auto& [name, path] : corpora) {
    if (!names.insert(name).second) throw ConfigError("duplicate corpus '" + name + "'");
    require_file(path, "corpus '" + name + "'");
  }
  if (!names.count(settings.in_domain))
    throw ConfigError("in_domain '" + settings.in_domain + "' is not listed under [corpora]");

  std::set<std::string> vnames;
  for (const auto& v : variants) {
    if (!vnames.insert(v.name).second) throw ConfigError("duplicate variant '" + v.name + "'");
    bool any = v.train || v.dev || !v.corpora.empty();
    if (!any) continue;
    if (!v.train || !v.dev) throw ConfigError("variant '" + v.name + "' needs train and dev vector tables");
    require_file(*v.train, "variant '" + v.name + "' train vectors");
    require_file(*v.dev, "variant '" + v.name + "' dev vectors");
    for (const auto& [name, path] : v.corpora)
      if (!names.count(name)) throw ConfigError("variant '" + v.name + "' names unknown corpus '" + name + "'");
    for (const auto& n : names) {
      auto it = v.corpora.find(n);
      if (it == v.corpora.end()) throw ConfigError("variant '" + v.name + "' has no vectors for corpus '" + n + "'");
      require_file(it->second, "variant '" + v.name + "' vectors for corpus '" + n + "'");
    }
  }
  if (!settings.base_variant.empty() && !vnames.count(settings.base_variant))
    throw ConfigError("base_variant '" + settings.base_variant + "' is not defined");
  try {
    settings.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentInputs load_experiment_inputs(const ExperimentConfig& config) {
  config.validate();
  ExperimentInputs in;
  auto load_trees = [&](const std::string& name, const std::filesystem::path& path) {
    try {
      auto raw = read_treebank_file(path, config.normalization.root_label);
      auto norm = normalize_treebank(raw, config.normalization);
      in.dropped.insert(in.dropped.end(), norm.dropped.begin(), norm.dropped.end());
      return std::move(norm.treebank.trees);
    } catch (const std::exception& e) {
      throw std::runtime_error("corpus '" + name + "' (" + path.string() + "): " + e.what());
    }
  };
  in.train = load_trees("train", config.train);
  in.dev = load_trees("dev", config.dev);
  for (const auto& [name, path] : config.corpora) in.corpora.push_back({name, load_trees(name, path)});

  auto tokens = [](const std::vector<ParseTree>& trees) {
    std::vector<std::vector<std::string>> out;
    out.reserve(trees.size());
    for (const auto& t : trees) out.push_back(forms(leaves(t)));
    return out;
  };
  auto load_vectors = [&](const std::string& variant, const std::string& corpus, const std::filesystem::path& path,
                          const std::vector<ParseTree>& trees) {
    try {
      return load_vector_table(path, tokens(trees));
    } catch (const std::exception& e) {
      throw std::runtime_error("variant '" + variant + "', vectors for corpus '" + corpus + "' (" + path.string() +
                               "): " + e.what());
    }
  };
  for (const auto& vf : config.variants) {
    RepresentationVariant v;
    v.name = vf.name;
    if (vf.train) {
      v.train = load_vectors(vf.name, "train", *vf.train, in.train);
      v.dev = load_vectors(vf.name, "dev", *vf.dev, in.dev);
      for (const auto& c : in.corpora) v.corpora.emplace(c.name, load_vectors(vf.name, c.name, vf.corpora.at(c.name), c.trees));
    }
    in.variants.push_back(std::move(v));
  }
  return in;
}

}  // namespace xdparse
