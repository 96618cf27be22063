#include "siren/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "siren/error.hpp"

namespace siren {
namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

}  // namespace

void write_data_csv(std::ostream& out, const Eigen::MatrixXd& data) {
  std::string text;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    text += fmt::format("{}n{}", c == 0 ? "" : ",", c);
  }
  text += '\n';
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      text += fmt::format("{}{}", c == 0 ? "" : ",", data(r, c));
    }
    text += '\n';
  }
  out << text;
}

void write_data_csv(const std::filesystem::path& path, const Eigen::MatrixXd& data) {
  auto out = open_out(path);
  write_data_csv(out, data);
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

Eigen::MatrixXd read_data_csv(std::istream& in, std::optional<std::size_t> expected_cols) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty input, expected a header row");
  const auto header = split(line);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (trim(header[c]) != fmt::format("n{}", c)) {
      throw ParseError(fmt::format("csv line 1: column {} is '{}', expected 'n{}'", c + 1,
                                   trim(header[c]), c));
    }
  }
  if (expected_cols && header.size() < *expected_cols) {
    throw ParseError(fmt::format("csv: missing column for node n{} ({} nodes expected)",
                                 header.size(), *expected_cols));
  }
  if (expected_cols && header.size() > *expected_cols) {
    throw ParseError(fmt::format("csv: {} columns but the graph has {} nodes",
                                 header.size(), *expected_cols));
  }
  const std::size_t d = header.size();
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != d) {
      throw ParseError(fmt::format("csv line {}: {} fields, expected {}", line_no,
                                   cells.size(), d));
    }
    for (std::size_t c = 0; c < d; ++c) {
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw ParseError(fmt::format("csv line {}, column n{}: '{}' is not a number",
                                     line_no, c, cell));
      }
      values.push_back(v);
    }
    ++rows;
  }
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * d + c];
    }
  }
  return data;
}

Eigen::MatrixXd read_data_csv(const std::filesystem::path& path,
                              std::optional<std::size_t> expected_cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  try {
    return read_data_csv(in, expected_cols);
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace siren
