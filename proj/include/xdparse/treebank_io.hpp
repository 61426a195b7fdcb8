#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xdparse/tree.hpp"

namespace xdparse {

struct RawTreebank {
  std::string source;
  std::vector<ParseTree> trees;
};

struct NormalizationConfig {
  bool strip_function_tags = true;
  bool remove_empty_elements = true;
  std::string root_label = "TOP";
  std::string function_tag_separators = "-=";
  /// Labels kept verbatim even though they contain separator characters.
  std::vector<std::string> exempt_labels = {"-NONE-", "-LRB-", "-RRB-"};
  std::string empty_element_tag = "-NONE-";
};

/// Malformed bracketed input. Line and column are 1-based.
class TreebankParseError : public std::runtime_error {
 public:
  TreebankParseError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Parses whitespace-separated S-expressions, one tree each. A node with an
/// empty label (the PTB "( (S ...) )" wrapper) is given root_label.
RawTreebank read_bracketed(std::string_view text, std::string source = {},
                           std::string_view root_label = "TOP");
RawTreebank read_treebank_file(const std::filesystem::path& path, std::string_view root_label = "TOP");

/// One tree per line. Token forms and tags containing parentheses are written
/// as -LRB- / -RRB-.
std::string to_bracketed(const ParseTree& tree);
std::string write_bracketed(const RawTreebank& treebank);

/// Returns nullopt when nothing but empty elements remains.
std::optional<ParseTree> normalize(const ParseTree& tree, const NormalizationConfig& config);

struct DroppedSentence {
  std::string source;
  std::size_t index = 0;
  std::string reason;
};

struct NormalizedTreebank {
  RawTreebank treebank;
  std::vector<DroppedSentence> dropped;
};

NormalizedTreebank normalize_treebank(const RawTreebank& raw, const NormalizationConfig& config);

/// Sidecar report: one "source<TAB>index<TAB>reason" line per dropped sentence.
void write_drop_report(std::ostream& out, const std::vector<DroppedSentence>& dropped);

/// Reads one sentence per line of word_tag tokens. '_' separates form and tag;
/// a backslash escapes '_' or '\' inside either part. Blank lines are skipped.
std::vector<std::vector<Word>> read_tagged_sentences(std::string_view text);
std::string format_tagged(const std::vector<Word>& sentence);

/// Forms joined by spaces: the token text used for vector-table alignment.
std::vector<std::string> forms(std::span<const Word> sentence);

std::string read_file(const std::filesystem::path& path);

}  // namespace xdparse
