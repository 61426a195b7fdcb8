#include "xdparse/treebank_io.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

namespace xdparse {

TreebankParseError::TreebankParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(what + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
      line_(line),
      column_(column) {}

namespace {

struct Token {
  enum Kind { Open, Close, Atom, End } kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    while (pos_ < text_.size() && is_space(text_[pos_])) advance();
    if (pos_ >= text_.size()) return {Token::End, {}, line_, col_};
    std::size_t line = line_, col = col_;
    char c = text_[pos_];
    if (c == '(') {
      advance();
      return {Token::Open, "(", line, col};
    }
    if (c == ')') {
      advance();
      return {Token::Close, ")", line, col};
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_]) && text_[pos_] != '(' && text_[pos_] != ')') advance();
    return {Token::Atom, std::string(text_.substr(start, pos_ - start)), line, col};
  }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

class Reader {
 public:
  Reader(std::string_view text, std::string_view root_label) : lex_(text), root_label_(root_label) {
    look_ = lex_.next();
  }

  bool at_end() const { return look_.kind == Token::End; }

  // Parses "( label child+ )" or "( tag form )"; the opening paren is current.
  ParseTree read_tree(bool top) {
    Token open = take();
    if (open.kind != Token::Open) throw TreebankParseError("expected '('", open.line, open.column);

    std::string label;
    if (look_.kind == Token::Atom) label = take().text;

    if (look_.kind == Token::Atom) {
      Token form = take();
      if (label.empty()) throw TreebankParseError("token '" + form.text + "' has no tag", form.line, form.column);
      expect_close();
      return ParseTree::leaf(Word{form.text, label});
    }

    std::vector<ParseTree> kids;
    while (look_.kind == Token::Open) kids.push_back(read_tree(false));
    if (look_.kind == Token::Atom)
      throw TreebankParseError("bare token '" + look_.text + "' among subtrees", look_.line, look_.column);
    expect_close();
    if (kids.empty()) throw TreebankParseError("empty constituent", open.line, open.column);
    if (label.empty()) {
      if (!top) throw TreebankParseError("unlabeled constituent below the root", open.line, open.column);
      label = root_label_;
    }
    return ParseTree::node(std::move(label), std::move(kids));
  }

  const Token& look() const { return look_; }

 private:
  Token take() {
    Token t = std::move(look_);
    look_ = lex_.next();
    return t;
  }

  void expect_close() {
    if (look_.kind == Token::End) throw TreebankParseError("unbalanced parentheses: missing ')'", look_.line, look_.column);
    if (look_.kind != Token::Close) throw TreebankParseError("expected ')'", look_.line, look_.column);
    take();
  }

  Lexer lex_;
  std::string_view root_label_;
  Token look_;
};

std::string escape_parens(const std::string& s) {
  if (s == "(") return "-LRB-";
  if (s == ")") return "-RRB-";
  if (s.find_first_of("()") == std::string::npos) return s;
  std::string out;
  for (char c : s) {
    if (c == '(')
      out += "-LRB-";
    else if (c == ')')
      out += "-RRB-";
    else
      out += c;
  }
  return out;
}

void write_tree(const ParseTree& t, std::string& out) {
  out += '(';
  out += escape_parens(t.label());
  if (t.is_leaf()) {
    out += ' ';
    out += escape_parens(t.word().form);
  } else {
    for (const auto& c : t.children()) {
      out += ' ';
      write_tree(c, out);
    }
  }
  out += ')';
}

std::string strip_label(const std::string& label, const NormalizationConfig& config) {
  if (!config.strip_function_tags) return label;
  if (std::find(config.exempt_labels.begin(), config.exempt_labels.end(), label) != config.exempt_labels.end())
    return label;
  std::size_t cut = label.find_first_of(config.function_tag_separators, 1);
  if (cut == std::string::npos) return label;
  return label.substr(0, cut);
}

std::optional<ParseTree> normalize_rec(const ParseTree& t, const NormalizationConfig& config) {
  if (t.is_leaf()) {
    if (config.remove_empty_elements && t.label() == config.empty_element_tag) return std::nullopt;
    std::string tag = strip_label(t.label(), config);
    if (tag == t.label()) return t;
    return ParseTree::leaf(Word{t.word().form, std::move(tag)});
  }
  std::vector<ParseTree> kids;
  for (const auto& c : t.children()) {
    if (auto n = normalize_rec(c, config)) kids.push_back(std::move(*n));
  }
  if (kids.empty()) return std::nullopt;
  return ParseTree::node(strip_label(t.label(), config), std::move(kids));
}

}  // namespace

RawTreebank read_bracketed(std::string_view text, std::string source, std::string_view root_label) {
  RawTreebank tb;
  tb.source = std::move(source);
  Reader reader(text, root_label);
  while (!reader.at_end()) {
    if (reader.look().kind != Token::Open) {
      const Token& t = reader.look();
      throw TreebankParseError(t.kind == Token::Close ? "unbalanced parentheses: unexpected ')'"
                                                      : "unexpected token '" + t.text + "' outside a tree",
                               t.line, t.column);
    }
    tb.trees.push_back(reader.read_tree(true));
  }
  return tb;
}

RawTreebank read_treebank_file(const std::filesystem::path& path, std::string_view root_label) {
  return read_bracketed(read_file(path), path.string(), root_label);
}

std::string to_bracketed(const ParseTree& tree) {
  std::string out;
  write_tree(tree, out);
  return out;
}

std::string write_bracketed(const RawTreebank& treebank) {
  std::string out;
  for (const auto& t : treebank.trees) {
    write_tree(t, out);
    out += '\n';
  }
  return out;
}

std::optional<ParseTree> normalize(const ParseTree& tree, const NormalizationConfig& config) {
  auto out = normalize_rec(tree, config);
  if (!out) return std::nullopt;
  if (out->is_leaf() || out->label() != config.root_label) return ParseTree::node(config.root_label, {*out});
  return out;
}

NormalizedTreebank normalize_treebank(const RawTreebank& raw, const NormalizationConfig& config) {
  NormalizedTreebank out;
  out.treebank.source = raw.source;
  for (std::size_t i = 0; i < raw.trees.size(); ++i) {
    if (auto t = normalize(raw.trees[i], config))
      out.treebank.trees.push_back(std::move(*t));
    else
      out.dropped.push_back({raw.source, i, "no words left after removing empty elements"});
  }
  return out;
}

void write_drop_report(std::ostream& out, const std::vector<DroppedSentence>& dropped) {
  for (const auto& d : dropped) out << d.source << '\t' << d.index << '\t' << d.reason << '\n';
}

std::vector<std::vector<Word>> read_tagged_sentences(std::string_view text) {
  std::vector<std::vector<Word>> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::vector<Word> sentence;
    std::istringstream tokens{std::string(line)};
    std::string tok;
    while (tokens >> tok) {
      std::string form, tag, cur;
      int separators = 0;
      for (std::size_t i = 0; i < tok.size(); ++i) {
        char c = tok[i];
        if (c == '\\') {
          if (i + 1 >= tok.size() || (tok[i + 1] != '_' && tok[i + 1] != '\\'))
            throw std::runtime_error("line " + std::to_string(line_no) + ": bad escape in token '" + tok + "'");
          cur += tok[++i];
        } else if (c == '_') {
          ++separators;
          form = std::move(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      tag = std::move(cur);
      if (separators != 1 || form.empty() || tag.empty())
        throw std::runtime_error("line " + std::to_string(line_no) + ": malformed token '" + tok +
                                 "' (expected word_tag)");
      sentence.push_back(Word{std::move(form), std::move(tag)});
    }
    if (!sentence.empty()) out.push_back(std::move(sentence));
  }
  return out;
}

std::string format_tagged(const std::vector<Word>& sentence) {
  auto esc = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '_' || c == '\\') o += '\\';
      o += c;
    }
    return o;
  };
  std::string out;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (i) out += ' ';
    out += esc(sentence[i].form) + '_' + esc(sentence[i].tag);
  }
  return out;
}

std::vector<std::string> forms(std::span<const Word> sentence) {
  std::vector<std::string> out;
  out.reserve(sentence.size());
  for (const auto& w : sentence) out.push_back(w.form);
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace xdparse
