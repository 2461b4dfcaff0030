#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "poslab/linalg.hpp"

namespace poslab {

using json = nlohmann::ordered_json;

/// Shortest-round-trip is not enough for diffable output; always 17
/// significant digits, '.' decimal regardless of locale.
std::string format_double(double x);

std::string sha256_hex(const std::string& bytes);

std::string read_file(const std::filesystem::path& p);
/// Creates parent directories. Throws IoError.
void write_file(const std::filesystem::path& p, const std::string& contents);

json matrix_to_json(const Matrix& m);
/// Accepts {"rows","cols","data"} or a nested array of rows.
Matrix matrix_from_json(const json& j);
json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

/// CSV with one row per entry of `rows`, header optional.
std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);

}  // namespace poslab
