#include "mcghd_cli/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mcghd/error.hpp"

namespace mcghd::cli {
namespace {

using nlohmann::json;

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j, const char* key, Eigen::Index expected) {
  const auto values = j.at(key).get<std::vector<double>>();
  if (expected >= 0 && static_cast<Eigen::Index>(values.size()) != expected) {
    throw InputError(std::string("model document: '") + key + "' has the wrong length");
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

ModelDocument document_from_fit(const FitResult& fit) {
  ModelDocument doc;
  doc.model = fit.model;
  doc.scaling = fit.scaling;
  doc.seed = fit.seed;
  doc.iterations = fit.n_iter;
  doc.converged = fit.converged;
  doc.loglik = fit.loglik;
  doc.bic = fit.bic;
  return doc;
}

std::string to_json(const ModelDocument& doc) {
  const MixtureModel& m = doc.model;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["family"] = std::string(family_name(m.family));
  j["G"] = m.num_components();
  j["p"] = m.dim();
  j["pi"] = vec(m.pi);
  json comps = json::array();
  for (const CGHDComponent& c : m.components) {
    // Row-major flattening of gamma.
    std::vector<double> gamma;
    for (Eigen::Index r = 0; r < c.gamma.rows(); ++r) {
      for (Eigen::Index k = 0; k < c.gamma.cols(); ++k) gamma.push_back(c.gamma(r, k));
    }
    comps.push_back({{"mu", vec(c.mu)},
                     {"gamma", gamma},
                     {"phi", vec(c.phi)},
                     {"beta", vec(c.beta)},
                     {"omega", vec(c.omega)},
                     {"lambda", vec(c.lambda)},
                     {"omega0", c.omega0},
                     {"lambda0", c.lambda0},
                     {"varpi", c.varpi}});
  }
  j["components"] = comps;
  j["fit"] = {{"seed", doc.seed},
              {"iterations", doc.iterations},
              {"converged", doc.converged},
              {"loglik", doc.loglik},
              {"bic", doc.bic}};
  if (doc.scaling) {
    j["scaling"] = {{"mean", vec(doc.scaling->mean)}, {"sd", vec(doc.scaling->sd)}};
  } else {
    j["scaling"] = nullptr;
  }
  return j.dump(2);
}

ModelDocument from_json(const std::string& text) {
  ModelDocument doc;
  try {
    const json j = json::parse(text);
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
      throw InputError("unsupported model schema version " + std::to_string(version));
    }
    MixtureModel& m = doc.model;
    m.family = parse_family(j.at("family").get<std::string>());
    const int G = j.at("G").get<int>();
    const int p = j.at("p").get<int>();
    if (G < 1 || p < 1) throw InputError("model document: G and p must be positive");
    m.pi = to_vec(j, "pi", G);
    const json& comps = j.at("components");
    if (static_cast<int>(comps.size()) != G) {
      throw InputError("model document: component count does not match G");
    }
    for (const json& jc : comps) {
      CGHDComponent c;
      c.mu = to_vec(jc, "mu", p);
      const Eigen::VectorXd flat = to_vec(jc, "gamma", static_cast<Eigen::Index>(p) * p);
      c.gamma.resize(p, p);
      for (int r = 0; r < p; ++r) {
        for (int k = 0; k < p; ++k) c.gamma(r, k) = flat(r * p + k);
      }
      c.phi = to_vec(jc, "phi", p);
      c.beta = to_vec(jc, "beta", p);
      c.omega = to_vec(jc, "omega", p);
      c.lambda = to_vec(jc, "lambda", p);
      c.omega0 = jc.at("omega0").get<double>();
      c.lambda0 = jc.at("lambda0").get<double>();
      c.varpi = jc.at("varpi").get<double>();
      m.components.push_back(std::move(c));
    }
    if (j.contains("fit")) {
      const json& f = j.at("fit");
      doc.seed = f.value("seed", std::uint64_t{0});
      doc.iterations = f.value("iterations", 0);
      doc.converged = f.value("converged", false);
      doc.loglik = f.value("loglik", 0.0);
      doc.bic = f.value("bic", 0.0);
    }
    if (j.contains("scaling") && !j.at("scaling").is_null()) {
      Scaling s;
      s.mean = to_vec(j.at("scaling"), "mean", p);
      s.sd = to_vec(j.at("scaling"), "sd", p);
      doc.scaling = s;
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model document: ") + e.what());
  }
  doc.model.validate();
  return doc;
}

void write_model(const std::string& path, const ModelDocument& doc) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << to_json(doc) << '\n';
}

ModelDocument read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

}  // namespace mcghd::cli
