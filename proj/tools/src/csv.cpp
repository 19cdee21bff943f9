#include "mcghd_cli/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mcghd/error.hpp"
#include "mcghd/inference.hpp"

namespace mcghd::cli {
namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  std::string out(s.substr(begin, end - begin + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string_view rest(line);
  while (true) {
    const auto pos = rest.find(delimiter);
    fields.push_back(trim(rest.substr(0, pos)));
    if (pos == std::string_view::npos) break;
    rest.remove_prefix(pos + 1);
  }
  return fields;
}

std::optional<double> parse_number(const std::string& field) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || begin == end) return std::nullopt;
  return value;
}

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << path << ":" << line << ": " << what;
  throw InputError(msg.str());
}

struct Row {
  std::size_t line;
  std::vector<std::string> fields;
};

std::vector<Row> read_rows(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<Row> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    rows.push_back({number, split(line, delimiter)});
  }
  if (rows.empty()) throw InputError(path + ": file is empty");
  return rows;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

int parse_label(const std::string& field, const std::string& na_marker,
                const std::string& path, std::size_t line) {
  if (field == na_marker) return kUnlabeled;
  const std::optional<double> value = parse_number(field);
  if (!value || *value != std::floor(*value) || *value < 1.0) {
    fail(path, line, "label '" + field + "' is not a positive integer or '" + na_marker + "'");
  }
  return static_cast<int>(*value) - 1;
}

}  // namespace

Dataset read_dataset(const std::string& path, const CsvOptions& options) {
  const std::vector<Row> rows = read_rows(path, options.delimiter);
  const std::size_t width = rows.front().fields.size();

  bool has_header = options.header == HeaderMode::kYes;
  if (options.header == HeaderMode::kAuto) {
    for (const std::string& f : rows.front().fields) {
      if (!parse_number(f) && f != options.na_marker) has_header = true;
    }
  }
  std::vector<std::string> names;
  if (has_header) {
    names = rows.front().fields;
  } else {
    for (std::size_t j = 0; j < width; ++j) names.push_back("x" + std::to_string(j + 1));
  }

  std::optional<std::size_t> label_index;
  if (options.label_column) {
    const std::string& key = *options.label_column;
    const auto it = std::find(names.begin(), names.end(), key);
    if (it != names.end()) {
      label_index = static_cast<std::size_t>(it - names.begin());
    } else if (const auto idx = parse_number(key); idx && *idx >= 1 && *idx <= width &&
                                                   *idx == std::floor(*idx)) {
      label_index = static_cast<std::size_t>(*idx) - 1;
    } else {
      throw InputError(path + ": no label column '" + key + "'");
    }
  }

  Dataset out;
  for (std::size_t j = 0; j < width; ++j) {
    if (j != label_index) out.column_names.push_back(names[j]);
  }
  const std::size_t first = has_header ? 1 : 0;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size() - first);
  const Eigen::Index p = static_cast<Eigen::Index>(out.column_names.size());
  if (n == 0) throw InputError(path + ": no data rows");
  if (p == 0) throw InputError(path + ": no feature columns");
  out.data.resize(n, p);
  if (label_index) out.labels.resize(static_cast<std::size_t>(n));

  for (std::size_t r = first; r < rows.size(); ++r) {
    const Row& row = rows[r];
    if (row.fields.size() != width) {
      fail(path, row.line,
           "expected " + std::to_string(width) + " fields, got " + std::to_string(row.fields.size()));
    }
    const Eigen::Index i = static_cast<Eigen::Index>(r - first);
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < width; ++j) {
      const std::string& field = row.fields[j];
      if (j == label_index) {
        out.labels[static_cast<std::size_t>(i)] =
            parse_label(field, options.na_marker, path, row.line);
        continue;
      }
      const std::optional<double> value = parse_number(field);
      if (!value || !std::isfinite(*value)) {
        fail(path, row.line,
             "column " + std::to_string(j + 1) + ": '" + field + "' is not a finite number");
      }
      out.data(i, col++) = *value;
    }
  }
  return out;
}

std::vector<int> read_labels(const std::string& path, const std::string& na_marker) {
  const std::vector<Row> rows = read_rows(path, ',');
  std::vector<int> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Row& row = rows[r];
    if (row.fields.size() != 1) fail(path, row.line, "expected a single label column");
    if (r == 0 && !parse_number(row.fields[0]) && row.fields[0] != na_marker) continue;
    out.push_back(parse_label(row.fields[0], na_marker, path, row.line));
  }
  return out;
}

void write_labels(const std::string& path, const std::vector<int>& labels,
                  const std::string& header) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << header << '\n';
  for (int label : labels) {
    if (label == kUnlabeled) {
      out << "NA\n";
    } else {
      out << label + 1 << '\n';
    }
  }
}

void write_matrix(const std::string& path, const Eigen::MatrixXd& data,
                  const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
      out << (j ? "," : "") << format_number(data(i, j));
    }
    out << '\n';
  }
}

}  // namespace mcghd::cli
