#include "cbrx/model.hpp"

#include <algorithm>

#include "cbrx/text.hpp"

namespace cbrx {

std::optional<std::size_t> AttributeDescriptor::symbol_index(const std::string& symbol) const {
  auto it = std::find(symbols.begin(), symbols.end(), symbol);
  if (it == symbols.end()) return std::nullopt;
  return static_cast<std::size_t>(it - symbols.begin());
}

std::optional<std::size_t> find_attribute(const Schema& schema, const std::string& name) {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name == name) return i;
  }
  return std::nullopt;
}

std::string to_label(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  if (const auto* x = std::get_if<double>(&v)) return format_number(*x);
  return {};
}

LocalSimilarityMeasure LocalSimilarityMeasure::identity_table(std::size_t symbols) {
  std::vector<std::vector<double>> m(symbols, std::vector<double>(symbols, 0.0));
  for (std::size_t i = 0; i < symbols; ++i) m[i][i] = 1.0;
  return table(std::move(m));
}

const char* LocalSimilarityMeasure::type_name() const {
  switch (variant.index()) {
    case 0:
      return "polynomial";
    case 1:
      return "step";
    default:
      return "table";
  }
}

bool LocalSimilarityMeasure::applies_to(AttributeKind kind) const {
  if (std::holds_alternative<TableMeasure>(variant)) return kind == AttributeKind::symbolic;
  return kind == AttributeKind::numeric;
}

}  // namespace cbrx
