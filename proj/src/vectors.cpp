#include "xdparse/vectors.hpp"

#include <cmath>
#include <fstream>

#include "xdparse/binary_io.hpp"
#include "xdparse/features.hpp"

namespace xdparse {

std::uint64_t corpus_alignment_hash(const std::vector<std::vector<std::string>>& sentences) {
  std::uint64_t h = kFnvOffsetBasis;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (s) h = fnv1a64("\n", h);
    for (std::size_t t = 0; t < sentences[s].size(); ++t) {
      if (t) h = fnv1a64(" ", h);
      h = fnv1a64(sentences[s][t], h);
    }
  }
  return h;
}

VectorTable read_vector_table(std::istream& in) {
  using namespace binary;
  VectorTable table;
  try {
    expect_magic(in, "PTVT");
    std::uint32_t version = get_u32(in);
    if (version != kPtvtVersion)
      throw VectorTableError("unsupported PTVT version " + std::to_string(version));
    table.dim = get_u32(in);
    if (table.dim == 0) throw VectorTableError("PTVT dimension must be positive");
    std::uint64_t n = get_u64(in);
    table.alignment_hash = get_u64(in);
    for (std::uint64_t s = 0; s < n; ++s) {
      Matrix m;
      m.rows = get_u32(in);
      m.cols = table.dim;
      if (static_cast<std::uint64_t>(m.rows) * m.cols > (1ULL << 31))
        throw VectorTableError("implausible row count at sentence " + std::to_string(s));
      m.data.resize(m.rows * m.cols);
      for (float& f : m.data) f = get_f32(in);
      table.sentences.push_back(std::move(m));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw VectorTableError("trailing bytes after PTVT payload");
  } catch (const FormatError& e) {
    throw VectorTableError(std::string("malformed PTVT file: ") + e.what());
  }
  return table;
}

VectorTable load_vector_table(std::istream& in, const std::vector<std::vector<std::string>>& expected_sentences) {
  VectorTable table = read_vector_table(in);
  std::uint64_t expected = corpus_alignment_hash(expected_sentences);
  if (table.alignment_hash != expected)
    throw VectorTableError("alignment hash mismatch: vector table does not belong to this corpus");
  if (table.sentences.size() != expected_sentences.size())
    throw VectorTableError("vector table has " + std::to_string(table.sentences.size()) + " sentences, corpus has " +
                           std::to_string(expected_sentences.size()));
  for (std::size_t i = 0; i < expected_sentences.size(); ++i)
    if (table.sentences[i].rows != expected_sentences[i].size())
      throw VectorTableError("row count mismatch at sentence " + std::to_string(i) + ": " +
                             std::to_string(table.sentences[i].rows) + " rows for " +
                             std::to_string(expected_sentences[i].size()) + " tokens");
  return table;
}

VectorTable load_vector_table(const std::filesystem::path& path,
                              const std::vector<std::vector<std::string>>& expected_sentences) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw VectorTableError("cannot open " + path.string());
  try {
    return load_vector_table(in, expected_sentences);
  } catch (const VectorTableError& e) {
    throw VectorTableError(path.string() + ": " + e.what());
  }
}

void write_vector_table(std::ostream& out, const VectorTable& table) {
  using namespace binary;
  put_magic(out, "PTVT");
  put_u32(out, kPtvtVersion);
  put_u32(out, table.dim);
  put_u64(out, table.sentences.size());
  put_u64(out, table.alignment_hash);
  for (const auto& m : table.sentences) {
    if (m.cols != table.dim || m.data.size() != m.rows * m.cols)
      throw VectorTableError("matrix shape does not match table dimension");
    put_u32(out, static_cast<std::uint32_t>(m.rows));
    for (float f : m.data) put_f32(out, f);
  }
}

void write_vector_table(const std::filesystem::path& path, const VectorTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw VectorTableError("cannot write " + path.string());
  write_vector_table(out, table);
}

Projection::Projection(std::size_t dim_in, std::size_t dim_out)
    : Projection(dim_in, dim_out, std::vector<float>(dim_in * dim_out, 0.0f)) {}

Projection::Projection(std::size_t dim_in, std::size_t dim_out, std::vector<float> weights)
    : dim_in_(dim_in), dim_out_(dim_out), weights_(std::move(weights)) {
  if (dim_in_ == 0 || dim_out_ == 0) throw std::invalid_argument("projection dimensions must be positive");
  if (weights_.size() != dim_in_ * dim_out_) throw std::invalid_argument("projection weight count mismatch");
  for (float w : weights_)
    if (!std::isfinite(w)) throw std::invalid_argument("projection weights must be finite");
}

std::vector<float> Projection::apply(std::span<const float> input) const {
  if (input.size() != dim_in_)
    throw std::invalid_argument("projection expects " + std::to_string(dim_in_) + " inputs, got " +
                                std::to_string(input.size()));
  std::vector<float> out(dim_out_);
  for (std::size_t o = 0; o < dim_out_; ++o) {
    double acc = 0.0;
    const float* w = weights_.data() + o * dim_in_;
    for (std::size_t i = 0; i < dim_in_; ++i) acc += static_cast<double>(w[i]) * input[i];
    out[o] = static_cast<float>(acc);
  }
  return out;
}

std::vector<float> project(std::span<const float> row, const Projection& p) { return p.apply(row); }

}  // namespace xdparse
