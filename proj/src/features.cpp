#include "xdparse/features.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace xdparse {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

FeatureBuilder::FeatureBuilder(int hash_bits) {
  if (hash_bits < 1 || hash_bits > 32) throw std::invalid_argument("hash_bits must be in [1, 32]");
  mask_ = (std::uint64_t{1} << hash_bits) - 1;
}

void FeatureBuilder::add(std::string_view name) {
  scratch_.assign(name);
  add_scratch();
}

void FeatureBuilder::add_scratch() {
  raw_.emplace_back(static_cast<std::uint32_t>(fnv1a64(scratch_) & mask_), 1.0f);
}

FeatureVector FeatureBuilder::finish() {
  std::sort(raw_.begin(), raw_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  FeatureVector fv;
  for (const auto& [idx, w] : raw_) {
    if (!fv.entries.empty() && fv.entries.back().first == idx)
      fv.entries.back().second += w;
    else
      fv.entries.emplace_back(idx, w);
  }
  raw_.clear();
  return fv;
}

namespace {

std::string_view length_bucket(int len) {
  if (len <= 4) {
    static const char* small[] = {"0", "1", "2", "3", "4"};
    return small[len];
  }
  if (len <= 7) return "5-7";
  if (len <= 10) return "8-10";
  if (len <= 20) return "11-20";
  return "21+";
}

// Stack-item descriptor: tag for a word, label for a phrase, "(X" for an open X.
std::string describe(const StackItem& item) {
  if (item.is_open()) return "(" + item.open_label;
  if (item.tree->is_leaf()) return "t:" + item.tree->label();
  return item.tree->label();
}

}  // namespace

FeatureVector featurize_span(std::span<const Word> sentence, int start, int end, int hash_bits) {
  const int n = static_cast<int>(sentence.size());
  if (start < 0 || start >= end || end > n) throw std::out_of_range("span indices out of range");

  auto word = [&](int i) -> std::string_view {
    if (i < 0) return "<s>";
    if (i >= n) return "</s>";
    return sentence[i].form;
  };
  auto tag = [&](int i) -> std::string_view {
    if (i < 0) return "<s>";
    if (i >= n) return "</s>";
    return sentence[i].tag;
  };

  std::string_view sw = word(start), ew = word(end - 1), pw = word(start - 1), fw = word(end);
  std::string_view st = tag(start), et = tag(end - 1), pt = tag(start - 1), ft = tag(end);
  std::string_view len = length_bucket(end - start);

  FeatureBuilder fb(hash_bits);
  fb.add("bias");
  fb.add("len", len);
  fb.add("sw", sw);
  fb.add("ew", ew);
  fb.add("pw", pw);
  fb.add("fw", fw);
  fb.add("st", st);
  fb.add("et", et);
  fb.add("pt", pt);
  fb.add("ft", ft);
  fb.add("st-et", st, et);
  fb.add("pt-st", pt, st);
  fb.add("et-ft", et, ft);
  fb.add("pt-ft", pt, ft);
  fb.add("pt-st-et-ft", pt, st, et, ft);
  fb.add("len-st-et", len, st, et);
  fb.add("len-pt-ft", len, pt, ft);
  fb.add("sw-et", sw, et);
  fb.add("st-ew", st, ew);
  return fb.finish();
}

FeatureVector featurize_state(const ParserState& state, int hash_bits) {
  const auto& stack = state.stack();
  const auto& sent = state.sentence();
  std::string s0 = stack.size() >= 1 ? describe(stack[stack.size() - 1]) : "<empty>";
  std::string s1 = stack.size() >= 2 ? describe(stack[stack.size() - 2]) : "<empty>";
  std::string_view open = state.open_label() ? std::string_view(*state.open_label()) : "<none>";
  std::string_view b0w = state.buffer_empty() ? "</s>" : std::string_view(sent[state.buffer_front()].form);
  std::string_view b0t = state.buffer_empty() ? "</s>" : std::string_view(sent[state.buffer_front()].tag);
  std::string prev = state.last_action() ? state.last_action()->to_string() : "<start>";
  std::string chain = std::to_string(std::min(state.top_chain(), 5));
  std::string opens = std::to_string(std::min(state.open_count(), 5));

  FeatureBuilder fb(hash_bits);
  fb.add("bias");
  fb.add("s0", s0);
  fb.add("s1", s1);
  fb.add("open", open);
  fb.add("b0w", b0w);
  fb.add("b0t", b0t);
  fb.add("prev", prev);
  fb.add("chain", chain);
  fb.add("nopen", opens);
  fb.add("s0-b0t", s0, b0t);
  fb.add("s0-s1", s0, s1);
  fb.add("s0-s1-b0t", s0, s1, b0t);
  fb.add("open-b0t", open, b0t);
  fb.add("open-s0", open, s0);
  fb.add("open-s0-b0t", open, s0, b0t);
  fb.add("prev-b0t", prev, b0t);
  fb.add("prev-s0", prev, s0);
  fb.add("chain-s0", chain, s0);
  fb.add("nopen-b0t", opens, b0t);
  return fb.finish();
}

}  // namespace xdparse
