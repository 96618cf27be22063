#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace siren {

// Data CSV: header n0,n1,...,n{d-1}, one observation per row. Values are
// written in shortest round-trip form.
void write_data_csv(std::ostream& out, const Eigen::MatrixXd& data);
void write_data_csv(const std::filesystem::path& path, const Eigen::MatrixXd& data);

// Throws ParseError with line context on malformed input, or naming the
// first missing node column when expected_cols is given.
Eigen::MatrixXd read_data_csv(std::istream& in,
                              std::optional<std::size_t> expected_cols = std::nullopt);
Eigen::MatrixXd read_data_csv(const std::filesystem::path& path,
                              std::optional<std::size_t> expected_cols = std::nullopt);

nlohmann::json read_json_file(const std::filesystem::path& path);
// Pretty-printed with two-space indent and a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace siren
