#include "poslab/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

namespace poslab {

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::general, 17);
  if (ec != std::errc{}) throw Error(Errc::IoError, "format_double failed");
  return std::string(buf.data(), end);
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error(Errc::IoError, "sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& p, const std::string& contents) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + p.string());
  out << contents;
  if (!out) throw Error(Errc::IoError, "write failed for " + p.string());
}

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const json& j) {
  try {
    if (j.is_array()) {
      if (j.empty()) throw Error(Errc::InvalidConfig, "matrix: empty row list");
      const std::size_t rows = j.size();
      const std::size_t cols = j.at(0).size();
      std::vector<double> data;
      for (const auto& row : j) {
        if (row.size() != cols) throw Error(Errc::InvalidConfig, "matrix: ragged rows");
        for (const auto& x : row) data.push_back(x.get<double>());
      }
      return Matrix(rows, cols, std::move(data));
    }
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("matrix: ") + e.what());
  }
}

json vector_to_json(const Vector& v) { return json(v); }

Vector vector_from_json(const json& j) {
  try {
    return j.get<Vector>();
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("vector: ") + e.what());
  }
}

std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  if (!header.empty()) out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace poslab
