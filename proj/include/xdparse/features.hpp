#pragma once

#include <cstdint>
#include <iterator>
#include <string>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "xdparse/transition.hpp"
#include "xdparse/tree.hpp"

namespace xdparse {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
inline constexpr int kDefaultHashBits = 22;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kFnvOffsetBasis);

/// Sparse feature vector over a hashed space of 2^bits indices. Entries are
/// sorted by index with no duplicates; colliding feature names add weights.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, float>> entries;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Collects feature-name strings and hashes them into a FeatureVector.
class FeatureBuilder {
 public:
  explicit FeatureBuilder(int hash_bits);

  /// Adds the feature "name" with weight 1.
  void add(std::string_view name);
  template <typename... Parts>
  void add(std::string_view a, std::string_view b, const Parts&... rest) {
    const std::string_view parts[] = {a, b, std::string_view(rest)...};
    scratch_.clear();
    for (std::size_t i = 0; i < std::size(parts); ++i) {
      if (i > 0) scratch_.push_back('|');
      scratch_.append(parts[i]);
    }
    add_scratch();
  }

  FeatureVector finish();

 private:
  void add_scratch();

  std::uint64_t mask_;
  std::string scratch_;
  std::vector<std::pair<std::uint32_t, float>> raw_;
};

/// Span features: words and tags at both boundaries and one token outside
/// each side, a length bucket, and conjunctions of these. Nothing outside
/// positions [start-1, end] is consulted.
FeatureVector featurize_span(std::span<const Word> sentence, int start, int end, int hash_bits);

/// State features: the top two stack items, the innermost open nonterminal,
/// the front-of-buffer word and tag, the previous action, and conjunctions.
FeatureVector featurize_state(const ParserState& state, int hash_bits);

}  // namespace xdparse
