#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace xdparse {

/// Row-major float matrix, one row per token.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Externally computed per-word vectors, order-aligned with a tokenized corpus.
struct VectorTable {
  std::uint32_t dim = 0;
  std::vector<Matrix> sentences;
  std::uint64_t alignment_hash = 0;

  friend bool operator==(const VectorTable&, const VectorTable&) = default;
};

class VectorTableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kPtvtVersion = 1;

/// FNV-1a 64 over the corpus text: tokens joined by ' ', sentences by '\n'.
std::uint64_t corpus_alignment_hash(const std::vector<std::vector<std::string>>& sentences);

/// Reads a PTVT stream without checking alignment against a corpus.
VectorTable read_vector_table(std::istream& in);

/// Reads a PTVT file and checks it against the tokenized corpus it must be
/// aligned with: hash first, then per-sentence row counts.
VectorTable load_vector_table(const std::filesystem::path& path,
                              const std::vector<std::vector<std::string>>& expected_sentences);
VectorTable load_vector_table(std::istream& in, const std::vector<std::vector<std::string>>& expected_sentences);

/// Writes the PTVT binary layout:
///   "PTVT" u32 version u32 dim u64 n_sentences u64 hash
///   per sentence: u32 n_tokens, n_tokens*dim f32, row-major
/// All integers and floats little-endian, no padding.
void write_vector_table(std::ostream& out, const VectorTable& table);
void write_vector_table(const std::filesystem::path& path, const VectorTable& table);

/// Learned linear map from imported vectors (dim_in) to parser inputs (dim_out).
class Projection {
 public:
  Projection() = default;
  /// Zero-initialised dim_out x dim_in matrix.
  Projection(std::size_t dim_in, std::size_t dim_out);
  Projection(std::size_t dim_in, std::size_t dim_out, std::vector<float> weights);

  std::size_t dim_in() const { return dim_in_; }
  std::size_t dim_out() const { return dim_out_; }

  /// Row o holds the weights producing output component o.
  std::span<const float> weights() const { return weights_; }
  std::span<float> weights() { return weights_; }
  float at(std::size_t out, std::size_t in) const { return weights_[out * dim_in_ + in]; }

  std::vector<float> apply(std::span<const float> input) const;

  friend bool operator==(const Projection&, const Projection&) = default;

 private:
  std::size_t dim_in_ = 0;
  std::size_t dim_out_ = 0;
  std::vector<float> weights_;
};

inline constexpr std::size_t kDefaultProjectionDim = 128;

/// Matrix-vector product; throws std::invalid_argument on a dimension mismatch.
std::vector<float> project(std::span<const float> row, const Projection& p);

}  // namespace xdparse
