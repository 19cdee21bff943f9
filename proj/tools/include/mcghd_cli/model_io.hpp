#pragma once

#include <optional>
#include <string>

#include "mcghd/inference.hpp"
#include "mcghd/model.hpp"

namespace mcghd::cli {

inline constexpr int kSchemaVersion = 1;

/// A fitted model as stored on disk.
struct ModelDocument {
  MixtureModel model;
  std::optional<Scaling> scaling;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  double loglik = 0.0;
  double bic = 0.0;
};

ModelDocument document_from_fit(const FitResult& fit);

std::string to_json(const ModelDocument& doc);
ModelDocument from_json(const std::string& text);

void write_model(const std::string& path, const ModelDocument& doc);
ModelDocument read_model(const std::string& path);

}  // namespace mcghd::cli
