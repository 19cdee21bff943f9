#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mcghd::cli {

enum class HeaderMode { kAuto, kYes, kNo };

struct CsvOptions {
  char delimiter = ',';
  HeaderMode header = HeaderMode::kAuto;
  /// Column holding class labels: a header name or a 1-based index.
  std::optional<std::string> label_column;
  std::string na_marker = "NA";
};

struct Dataset {
  std::vector<std::string> column_names;  ///< feature columns only
  Eigen::MatrixXd data;
  /// 0-based classes, kUnlabeled where the marker appeared; empty without a label column.
  std::vector<int> labels;
};

/// Reads a rectangular numeric CSV. Labels in the file are 1-based.
/// Throws InputError with the offending line number.
Dataset read_dataset(const std::string& path, const CsvOptions& options);

/// Reads a single-column label file (header optional, 1-based labels, NA allowed).
std::vector<int> read_labels(const std::string& path, const std::string& na_marker = "NA");

/// Writes labels 1-based under a header, NA for unlabeled entries.
void write_labels(const std::string& path, const std::vector<int>& labels,
                  const std::string& header = "label");

void write_matrix(const std::string& path, const Eigen::MatrixXd& data,
                  const std::vector<std::string>& header);

}  // namespace mcghd::cli
