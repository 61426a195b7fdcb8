#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "xdparse/chart.hpp"
#include "xdparse/inorder.hpp"

namespace xdparse {

enum class ParserKind { Chart, InOrder };

/// "chart" or "inorder"; throws std::invalid_argument otherwise.
ParserKind parse_parser_kind(std::string_view name);
std::string to_string(ParserKind kind);

using Model = std::variant<ChartModel, InOrderModel>;

ParserKind kind_of(const Model& model);
bool uses_vectors(const Model& model);

Model train_model(ParserKind kind, const std::vector<ParseTree>& train, const std::vector<ParseTree>& dev,
                  const TrainConfig& config, std::uint64_t seed, TrainingLog* log = nullptr,
                  const VectorTable* train_vectors = nullptr, const VectorTable* dev_vectors = nullptr);

/// Chart models ignore beam_size; beam_size 0 selects the in-order model's default.
ParseTree parse(const Model& model, std::span<const Word> sentence, int beam_size = 0,
                const Matrix* vectors = nullptr);

void save_model(const std::filesystem::path& path, const Model& model);
void save_model(std::ostream& out, const Model& model);
/// Detects the parser kind from the file header.
Model load_model(const std::filesystem::path& path);
Model load_model(std::istream& in);

}  // namespace xdparse
