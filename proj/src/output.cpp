#include "cavspdc/output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cavspdc/error.hpp"

namespace cavspdc {

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

std::string cell_text(const Cell& c) {
  return std::visit(
      [](auto v) -> std::string {
        if constexpr (std::is_same_v<decltype(v), double>) {
          return format_number(v);
        } else {
          return std::to_string(v);
        }
      },
      c);
}

}  // namespace

std::string to_csv(const Table& t) {
  std::string out;
  for (const auto& c : t.comments) out += "# " + c + "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    out += (i ? "," : "") + t.columns[i];
  }
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += cell_text(row[i]);
    }
    out += "\n";
  }
  return out;
}

Json to_json(const Table& t) {
  Json j;
  if (!t.comments.empty()) j["comments"] = t.comments;
  j["columns"] = t.columns;
  Json rows = Json::array();
  for (const auto& row : t.rows) {
    Json r = Json::array();
    for (const auto& c : row) std::visit([&](auto v) { r.push_back(v); }, c);
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) fail(ErrorKind::io, "error writing '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace cavspdc
