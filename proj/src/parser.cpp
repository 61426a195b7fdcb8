#include "xdparse/parser.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "xdparse/binary_io.hpp"

namespace xdparse {

ParserKind parse_parser_kind(std::string_view name) {
  if (name == "chart") return ParserKind::Chart;
  if (name == "inorder") return ParserKind::InOrder;
  throw std::invalid_argument("unknown parser kind '" + std::string(name) + "' (expected chart or inorder)");
}

std::string to_string(ParserKind kind) { return kind == ParserKind::Chart ? "chart" : "inorder"; }

ParserKind kind_of(const Model& model) {
  return std::holds_alternative<ChartModel>(model) ? ParserKind::Chart : ParserKind::InOrder;
}

bool uses_vectors(const Model& model) {
  return std::visit([](const auto& m) { return m.scorer.has_projection(); }, model);
}

Model train_model(ParserKind kind, const std::vector<ParseTree>& train, const std::vector<ParseTree>& dev,
                  const TrainConfig& config, std::uint64_t seed, TrainingLog* log, const VectorTable* train_vectors,
                  const VectorTable* dev_vectors) {
  if (kind == ParserKind::Chart) return train_chart(train, dev, config, seed, log, train_vectors, dev_vectors);
  return train_inorder(train, dev, config, seed, log, train_vectors, dev_vectors);
}

ParseTree parse(const Model& model, std::span<const Word> sentence, int beam_size, const Matrix* vectors) {
  if (const auto* chart = std::get_if<ChartModel>(&model)) return parse_chart(sentence, *chart, vectors).tree;
  const auto& inorder = std::get<InOrderModel>(model);
  return beam_decode(sentence, inorder, beam_size > 0 ? beam_size : inorder.beam_size, vectors).tree;
}

void save_model(std::ostream& out, const Model& model) {
  std::visit([&](const auto& m) { m.save(out); }, model);
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ostringstream buf(std::ios::binary);
  save_model(buf, model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << buf.str();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Model load_model(std::istream& in) {
  // Magic (4), version (4), kind (1).
  char header[9];
  if (!in.read(header, sizeof header)) throw binary::FormatError("truncated model header");
  in.seekg(-static_cast<std::streamoff>(sizeof header), std::ios::cur);
  if (header[8] == 'C') return ChartModel::load(in);
  if (header[8] == 'I') return InOrderModel::load(in);
  throw binary::FormatError("unknown model kind");
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  return load_model(in);
}

}  // namespace xdparse
