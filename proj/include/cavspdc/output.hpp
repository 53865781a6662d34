#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace cavspdc {

using Json = nlohmann::ordered_json;

using Cell = std::variant<double, std::int64_t, std::uint64_t>;

struct Table {
  std::vector<std::string> comments;  // emitted as "# ..." lines before the header
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// 9 significant digits, "%.9g".
std::string format_number(double v);

std::string to_csv(const Table& table);
/// {"comments": [...], "columns": [...], "rows": [[...], ...]}
Json to_json(const Table& table);

/// Pretty JSON with a trailing newline. Doubles print with round-trip precision.
std::string dump(const Json& j);

/// Throws Error{io}.
void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace cavspdc
