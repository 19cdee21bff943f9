#include "mcghd_cli/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "mcghd/densities.hpp"
#include "mcghd/error.hpp"
#include "mcghd/inference.hpp"
#include "mcghd/labels.hpp"
#include "mcghd/selection.hpp"
#include "mcghd/simulate.hpp"
#include "mcghd_cli/csv.hpp"
#include "mcghd_cli/model_io.hpp"

namespace mcghd::cli {
namespace {

namespace fs = std::filesystem;

struct DataOptions {
  std::string label_column;
  std::string na = "NA";
  char delimiter = ',';
  std::string header = "auto";

  CsvOptions csv(bool with_labels = true) const {
    CsvOptions o;
    o.delimiter = delimiter;
    o.na_marker = na;
    if (header == "yes") {
      o.header = HeaderMode::kYes;
    } else if (header == "no") {
      o.header = HeaderMode::kNo;
    } else if (header != "auto") {
      throw InputError("--header must be auto, yes or no");
    }
    if (with_labels && !label_column.empty()) o.label_column = label_column;
    return o;
  }
};

struct FitOptions {
  std::string family = "mcghd";
  std::string G;
  bool scale = false;
  std::uint64_t seed = 1;
  int max_iter = 500;
  double epsilon = 0.01;
  int restarts = 1;
  std::string init = "kmeans";
  std::string out_dir = ".";

  FitConfig config(Family fam, int g) const {
    FitConfig c;
    c.family = fam;
    c.G = g;
    c.scale_data = scale;
    c.seed = seed;
    c.max_iter = max_iter;
    c.epsilon = epsilon;
    c.n_restarts = restarts;
    if (init == "kmeans") {
      c.init = InitMethod::kKmeans;
    } else if (init == "random") {
      c.init = InitMethod::kRandom;
    } else {
      throw InputError("--init must be kmeans or random");
    }
    return c;
  }
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--labels-col", d.label_column, "Label column (header name or 1-based index)");
  cmd->add_option("--na", d.na, "Marker for unlabeled rows")->capture_default_str();
  cmd->add_option("--delimiter", d.delimiter, "Field delimiter")->capture_default_str();
  cmd->add_option("--header", d.header, "Header row: auto, yes or no")->capture_default_str();
}

void add_fit_options(CLI::App* cmd, FitOptions& f) {
  cmd->add_option("--family", f.family, "mghd, mmsghd, mcmsghd, mcghd, a comma list or all")
      ->capture_default_str();
  cmd->add_option("--G", f.G, "Component count, range a..b or comma list");
  cmd->add_flag("--scale", f.scale, "Standardize columns before fitting");
  cmd->add_option("--seed", f.seed, "Random seed")->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "Maximum EM iterations")->capture_default_str();
  cmd->add_option("--epsilon", f.epsilon, "Aitken stopping threshold")->capture_default_str();
  cmd->add_option("--restarts", f.restarts, "Initializations per fit")->capture_default_str();
  cmd->add_option("--init", f.init, "kmeans or random")->capture_default_str();
  cmd->add_option("--out-dir", f.out_dir, "Output directory")->capture_default_str();
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

void write_scores(const std::string& path, const std::vector<ModelScore>& scores) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "family,G,loglik,rho,bic,status\n";
  out << std::setprecision(17);
  for (const ModelScore& s : scores) {
    std::string status = s.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << family_name(s.family) << ',' << s.G << ',';
    if (s.failed) {
      out << "NA," << s.rho << ",NA,";
    } else {
      out << s.loglik << ',' << s.rho << ',' << s.bic << ',';
    }
    out << '"' << status << "\"\n";
  }
}

// Density grid over the bounding box of 2-D data, padded by 10% per side.
void write_contours(const std::string& path, const Eigen::MatrixXd& data, const FitResult& fit,
                    int grid) {
  if (data.cols() != 2) throw InputError("--contours needs two-dimensional data");
  if (grid < 2) throw InputError("--contours needs at least 2 grid points per axis");
  const Eigen::RowVectorXd lo = data.colwise().minCoeff();
  const Eigen::RowVectorXd hi = data.colwise().maxCoeff();
  const Eigen::RowVectorXd pad = 0.1 * (hi - lo);
  double log_jacobian = 0.0;
  if (fit.scaling) log_jacobian = fit.scaling->sd.array().log().sum();
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "x,y,density\n" << std::setprecision(17);
  for (int a = 0; a < grid; ++a) {
    for (int b = 0; b < grid; ++b) {
      Eigen::MatrixXd point(1, 2);
      point(0, 0) = lo(0) - pad(0) + (hi(0) - lo(0) + 2 * pad(0)) * a / (grid - 1);
      point(0, 1) = lo(1) - pad(1) + (hi(1) - lo(1) + 2 * pad(1)) * b / (grid - 1);
      const Eigen::MatrixXd x = fit.scaling ? fit.scaling->apply(point) : point;
      const Eigen::VectorXd xv = x.row(0).transpose();
      const double density = std::exp(mixture_log_density(xv, fit.model) - log_jacobian);
      out << point(0, 0) << ',' << point(0, 1) << ',' << density << '\n';
    }
  }
}

void report_ari(std::ostream& out, const std::string& what, std::span<const int> truth,
                std::span<const int> pred) {
  out << what << ": " << fmt(ari(truth, pred)) << '\n';
}

int cmd_cluster(const std::string& data_path, const DataOptions& d, const FitOptions& f,
                int contours, const std::string& default_G, std::ostream& out) {
  const Dataset ds = read_dataset(data_path, d.csv());
  const std::vector<int> gs = parse_component_range(f.G.empty() ? default_G : f.G);
  const std::vector<Family> families = parse_family_list(f.family);
  const Eigen::Index needed = static_cast<Eigen::Index>(*std::min_element(gs.begin(), gs.end())) *
                              (ds.data.cols() + 1);
  if (ds.data.rows() <= needed) {
    throw InputError("need more than G*(p+1) = " + std::to_string(needed) + " rows, got " +
                     std::to_string(ds.data.rows()));
  }

  SelectionResult sel = select(ds.data, gs, families, f.config(families.front(), gs.front()));
  write_scores(out_path(f.out_dir, "scores.csv"), sel.scores);
  if (!sel.best_fit) {
    std::ostringstream msg;
    msg << "every fit failed:";
    for (const ModelScore& s : sel.scores) {
      msg << " [G=" << s.G << ", family=" << family_name(s.family) << ": " << s.status << "]";
    }
    throw DegenerateFitError(msg.str(), {});
  }
  const FitResult& best = *sel.best_fit;
  write_labels(out_path(f.out_dir, "labels.csv"), best.map_labels);
  write_model(out_path(f.out_dir, "model.json"), document_from_fit(best));
  if (contours > 0) write_contours(out_path(f.out_dir, "contours.csv"), ds.data, best, contours);

  out << "selected family=" << family_name(best.model.family) << " G=" << best.model.num_components()
      << " loglik=" << fmt(best.loglik) << " bic=" << fmt(best.bic)
      << " iterations=" << best.n_iter << (best.converged ? "" : " (max-iter reached)") << '\n';
  if (!ds.labels.empty()) report_ari(out, "ari", ds.labels, best.map_labels);
  return kExitOk;
}

Family single_family(const std::string& spec) {
  const std::vector<Family> fams = parse_family_list(spec);
  if (fams.size() != 1) throw InputError("this command takes a single --family");
  return fams.front();
}

int class_count(const FitOptions& f, std::span<const int> labels) {
  if (!f.G.empty()) {
    const std::vector<int> gs = parse_component_range(f.G);
    if (gs.size() != 1) throw InputError("this command takes a single --G");
    return gs.front();
  }
  int g = 0;
  for (int label : labels) g = std::max(g, label + 1);
  if (g == 0) throw InputError("no labeled rows");
  return g;
}

int cmd_classify(const std::string& data_path, const DataOptions& d, const FitOptions& f,
                 const std::string& truth_path, std::ostream& out) {
  if (d.label_column.empty()) throw InputError("classify needs --labels-col");
  const Dataset ds = read_dataset(data_path, d.csv());
  std::vector<int> unlabeled;
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    if (ds.labels[i] == kUnlabeled) unlabeled.push_back(static_cast<int>(i));
  }
  const std::string pred_path = out_path(f.out_dir, "predictions.csv");
  if (unlabeled.empty()) {
    std::ofstream(pred_path) << "row,label\n";
    out << "all rows are labeled; nothing to predict\n";
    return kExitOk;
  }
  const int G = class_count(f, ds.labels);
  const FitResult fit = fit_classification(ds.data, ds.labels, f.config(single_family(f.family), G));

  std::ofstream pred(pred_path);
  if (!pred) throw InputError("cannot write " + pred_path);
  pred << "row,label\n";
  std::vector<int> predicted;
  for (int i : unlabeled) {
    predicted.push_back(fit.map_labels[static_cast<std::size_t>(i)]);
    pred << i + 1 << ',' << predicted.back() + 1 << '\n';
  }
  write_labels(out_path(f.out_dir, "labels.csv"), fit.map_labels);
  write_model(out_path(f.out_dir, "model.json"), document_from_fit(fit));
  out << "classified " << unlabeled.size() << " unlabeled rows; loglik=" << fmt(fit.loglik)
      << '\n';

  if (!truth_path.empty()) {
    const std::vector<int> truth = read_labels(truth_path, d.na);
    std::vector<int> t;
    if (truth.size() == ds.labels.size()) {
      for (int i : unlabeled) t.push_back(truth[static_cast<std::size_t>(i)]);
    } else if (truth.size() == unlabeled.size()) {
      t = truth;
    } else {
      throw InputError("truth file must cover all rows or exactly the unlabeled rows");
    }
    report_ari(out, "ari (unlabeled rows)", t, predicted);
  }
  return kExitOk;
}

int cmd_da(const std::string& train_path, const std::string& test_path, const DataOptions& d,
           const FitOptions& f, std::ostream& out) {
  if (d.label_column.empty()) throw InputError("da needs --labels-col for the training file");
  if (!fs::exists(test_path)) throw InputError("cannot open " + test_path);
  const Dataset train = read_dataset(train_path, d.csv());
  // The test file may carry the label column; it is then used as ground truth.
  Dataset test;
  try {
    test = read_dataset(test_path, d.csv());
  } catch (const InputError&) {
    test = read_dataset(test_path, d.csv(false));
  }
  const int G = class_count(f, train.labels);
  const DiscriminantResult res =
      fit_discriminant(train.data, train.labels, test.data, f.config(single_family(f.family), G));
  write_labels(out_path(f.out_dir, "labels.csv"), res.test_labels);
  write_model(out_path(f.out_dir, "model.json"), document_from_fit(res.fit));
  out << "classified " << res.test_labels.size() << " test rows\n";
  if (!test.labels.empty()) report_ari(out, "ari (test rows)", test.labels, res.test_labels);
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const DataOptions& d, const std::string& out_dir, std::ostream& out) {
  const ModelDocument doc = read_model(model_path);
  const Dataset ds = read_dataset(data_path, d.csv());
  const Eigen::MatrixXd x = doc.scaling ? doc.scaling->apply(ds.data) : ds.data;
  const std::vector<int> labels = predict(x, doc.model);
  write_labels(out_path(out_dir, "labels.csv"), labels);
  out << "predicted " << labels.size() << " rows\n";
  if (!ds.labels.empty()) report_ari(out, "ari", ds.labels, labels);
  return kExitOk;
}

int cmd_simulate(const ScenarioSpec& spec, const std::string& out_dir, std::ostream& out) {
  const Scenario sc = generate_scenario(spec);
  std::vector<std::string> header;
  for (int j = 0; j < spec.p; ++j) header.push_back("x" + std::to_string(j + 1));
  write_matrix(out_path(out_dir, "data.csv"), sc.data, header);
  write_labels(out_path(out_dir, "truth.csv"), sc.labels);
  nlohmann::json j = {{"generator", std::string(generator_name(spec.generator))},
                      {"p", spec.p},
                      {"G", spec.G},
                      {"n_per_component", spec.n_per_component},
                      {"hypercube_side", spec.hypercube_side},
                      {"corr_range", {spec.corr_min, spec.corr_max}},
                      {"skew_range", {spec.skew_min, spec.skew_max}},
                      {"omega", spec.omega_fixed},
                      {"lambda", spec.lambda_fixed},
                      {"seed", spec.seed}};
  std::ofstream(out_path(out_dir, "scenario.json")) << j.dump(2) << '\n';
  out << "wrote " << sc.data.rows() << " rows to " << out_dir << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& a_path, const std::string& b_path, const std::string& na,
             bool as_json, std::ostream& out) {
  const std::vector<int> a = read_labels(a_path, na);
  const std::vector<int> b = read_labels(b_path, na);
  const double index = ari(a, b);
  const Confusion conf = confusion(a, b);
  if (as_json) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < conf.counts.rows(); ++r) {
      std::vector<int> row;
      for (Eigen::Index c = 0; c < conf.counts.cols(); ++c) row.push_back(conf.counts(r, c));
      rows.push_back(row);
    }
    std::vector<int> ra, cb;
    for (int v : conf.row_labels) ra.push_back(v + 1);
    for (int v : conf.col_labels) cb.push_back(v + 1);
    nlohmann::json j = {{"ari", index},
                        {"misclassification", conf.misclassification},
                        {"row_labels", ra},
                        {"col_labels", cb},
                        {"counts", rows}};
    out << j.dump(2) << '\n';
    return kExitOk;
  }
  out << "ari: " << fmt(index) << '\n';
  out << "misclassification: " << fmt(conf.misclassification) << '\n';
  out << "confusion (rows: " << a_path << ", columns: " << b_path << ")\n";
  out << std::setw(6) << "";
  for (int c : conf.col_labels) out << std::setw(6) << c + 1;
  out << '\n';
  for (Eigen::Index r = 0; r < conf.counts.rows(); ++r) {
    out << std::setw(6) << conf.row_labels[static_cast<std::size_t>(r)] + 1;
    for (Eigen::Index c = 0; c < conf.counts.cols(); ++c) out << std::setw(6) << conf.counts(r, c);
    out << '\n';
  }
  return kExitOk;
}

}  // namespace

std::vector<int> parse_component_range(const std::string& spec) {
  auto to_int = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size() || v < 1) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InputError("invalid component count '" + s + "' in --G " + spec);
    }
  };
  std::vector<int> out;
  if (const auto dots = spec.find(".."); dots != std::string::npos) {
    const int lo = to_int(spec.substr(0, dots));
    const int hi = to_int(spec.substr(dots + 2));
    if (lo > hi) throw InputError("empty component range " + spec);
    for (int g = lo; g <= hi; ++g) out.push_back(g);
    return out;
  }
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(item));
  if (out.empty()) throw InputError("empty --G");
  return out;
}

std::vector<Family> parse_family_list(const std::string& spec) {
  if (spec == "all") return {std::begin(kAllFamilies), std::end(kAllFamilies)};
  std::vector<Family> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_family(item));
  if (out.empty()) throw InputError("empty --family");
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model-based clustering with generalized hyperbolic mixtures", "mcghd"};
  app.require_subcommand(1);

  DataOptions data_opts;
  FitOptions fit_opts;
  std::string data_path, test_path, truth_path, model_path, a_path, b_path;
  int contours = 0;
  bool as_json = false;

  auto* cluster = app.add_subcommand("cluster", "Fit one model, or select by BIC over a sweep");
  cluster->add_option("data", data_path, "CSV data file")->required();
  add_data_options(cluster, data_opts);
  add_fit_options(cluster, fit_opts);
  cluster->add_option("--contours", contours, "Write an NxN density grid (2-D data)");

  auto* sel = app.add_subcommand("select", "BIC sweep; defaults to every family and G=1..4");
  sel->add_option("data", data_path, "CSV data file")->required();
  add_data_options(sel, data_opts);
  add_fit_options(sel, fit_opts);

  auto* classify = app.add_subcommand("classify", "Semi-supervised fit on partially labeled data");
  classify->add_option("data", data_path, "CSV data file with a label column")->required();
  classify->add_option("--truth", truth_path, "Ground-truth labels for reporting ARI");
  add_data_options(classify, data_opts);
  add_fit_options(classify, fit_opts);

  auto* da = app.add_subcommand("da", "Discriminant analysis: fit on train, label test");
  da->add_option("train", data_path, "Labeled training CSV")->required();
  da->add_option("test", test_path, "Test CSV")->required();
  add_data_options(da, data_opts);
  add_fit_options(da, fit_opts);

  auto* pred = app.add_subcommand("predict", "Label new data with a saved model");
  pred->add_option("model", model_path, "Model document")->required();
  pred->add_option("data", data_path, "CSV data file")->required();
  add_data_options(pred, data_opts);
  pred->add_option("--out-dir", fit_opts.out_dir, "Output directory")->capture_default_str();

  ScenarioSpec spec;
  std::string generator = "gaussian";
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scenario");
  sim->add_option("--generator", generator, "gaussian, skew_normal, ghd or msghd")
      ->capture_default_str();
  sim->add_option("--p", spec.p, "Dimension")->capture_default_str();
  sim->add_option("--G", spec.G, "Components")->capture_default_str();
  sim->add_option("--n", spec.n_per_component, "Rows per component")->capture_default_str();
  sim->add_option("--side", spec.hypercube_side, "Hypercube side for centres")
      ->capture_default_str();
  sim->add_option("--corr-min", spec.corr_min)->capture_default_str();
  sim->add_option("--corr-max", spec.corr_max)->capture_default_str();
  sim->add_option("--skew-min", spec.skew_min)->capture_default_str();
  sim->add_option("--skew-max", spec.skew_max)->capture_default_str();
  sim->add_option("--omega", spec.omega_fixed, "Latent concentration")->capture_default_str();
  sim->add_option("--lambda", spec.lambda_fixed, "Latent index")->capture_default_str();
  sim->add_option("--seed", spec.seed, "Random seed")->capture_default_str();
  sim->add_option("--out-dir", fit_opts.out_dir, "Output directory")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Compare two label files");
  eval->add_option("a", a_path, "Label file")->required();
  eval->add_option("b", b_path, "Label file")->required();
  eval->add_option("--na", data_opts.na, "Marker for unlabeled rows")->capture_default_str();
  eval->add_flag("--json", as_json, "Machine-readable output");

  std::vector<const char*> argv{"mcghd"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*cluster) return cmd_cluster(data_path, data_opts, fit_opts, contours, "1..4", out);
    if (*sel) {
      if (sel->count("--family") == 0) fit_opts.family = "all";
      return cmd_cluster(data_path, data_opts, fit_opts, 0, "1..4", out);
    }
    if (*classify) return cmd_classify(data_path, data_opts, fit_opts, truth_path, out);
    if (*da) return cmd_da(data_path, test_path, data_opts, fit_opts, out);
    if (*pred) return cmd_predict(model_path, data_path, data_opts, fit_opts.out_dir, out);
    if (*sim) {
      spec.generator = parse_generator(generator);
      return cmd_simulate(spec, fit_opts.out_dir, out);
    }
    if (*eval) return cmd_eval(a_path, b_path, data_opts.na, as_json, out);
  } catch (const DegenerateFitError& e) {
    err << "error: degenerate fit: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const NumericError& e) {
    err << "error: numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitInput;
}

}  // namespace mcghd::cli
