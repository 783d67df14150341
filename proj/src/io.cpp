#include "spa/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <vector>

namespace spa::io {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

std::vector<std::string_view> split_fields(const std::string& line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.emplace_back(line.data() + start, i - start);
      start = i + 1;
    }
  }
  return fields;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> row(fields.size());
    bool ok = true;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!parse_double(fields[j], row[j])) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      if (first_data_line) {
        first_data_line = false;  // header row
        continue;
      }
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": numeric parse failure");
    }
    first_data_line = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw std::invalid_argument(path + ": no numeric rows");
  }
  return rows;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path) {
  const auto rows = read_csv_rows(path);
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.front().size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

Vector read_csv_vector(const std::string& path) {
  const auto rows = read_csv_rows(path);
  if (rows.front().size() != 1) {
    throw std::invalid_argument(path + ": expected a single column");
  }
  Vector v(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = rows[i][0];
  }
  return v;
}

void write_vector_csv(const std::string& path, const Vector& v) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << format_double(v[i]) << '\n';
  }
  write_text(path, out.str());
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write file: " + path);
  out << content;
  if (!out) throw std::invalid_argument("write failed: " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
  return fnv1a(read_text(path));
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace spa::io
