#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mcghd/densities.hpp"
#include "mcghd/error.hpp"
#include "mcghd/simulate.hpp"
#include "mcghd_cli/commands.hpp"
#include "mcghd_cli/csv.hpp"
#include "mcghd_cli/model_io.hpp"
#include "oracles.hpp"

using namespace mcghd;
using namespace mcghd::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mcghd_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run_cli(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  // Two well separated blobs with a 1-based label column; every fourth
  // label replaced by NA when `hide` is set.
  void write_blobs(const std::string& name, std::uint64_t seed, bool hide = false,
                   bool with_labels = true) {
    ScenarioSpec spec;
    spec.p = 2;
    spec.G = 2;
    spec.n_per_component = 60;
    spec.seed = seed;
    Scenario s = generate_scenario(spec);
    s.data.bottomRows(60).array() += 70.0;
    std::ofstream out(path(name));
    out << "x1,x2" << (with_labels ? ",class" : "") << '\n';
    for (Eigen::Index i = 0; i < s.data.rows(); ++i) {
      out << s.data(i, 0) << ',' << s.data(i, 1);
      if (with_labels) {
        if (hide && i % 4 == 0) out << ",NA";
        else out << ',' << s.labels[i] + 1;
      }
      out << '\n';
    }
    truth_ = s.labels;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
  std::vector<int> truth_;
};

}  // namespace

TEST(ComponentRange, Parsing) {
  EXPECT_EQ(parse_component_range("3"), (std::vector<int>{3}));
  EXPECT_EQ(parse_component_range("1..4"), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(parse_component_range("1,3"), (std::vector<int>{1, 3}));
  EXPECT_THROW(parse_component_range("0"), InputError);
  EXPECT_THROW(parse_component_range("4..2"), InputError);
  EXPECT_THROW(parse_component_range("x"), InputError);
  EXPECT_EQ(parse_family_list("all").size(), 4u);
  EXPECT_EQ(parse_family_list("mghd,MCGHD"), (std::vector<Family>{Family::MGHD, Family::MCGHD}));
}

TEST(ModelIo, RoundTripPreservesDensity) {
  std::mt19937_64 rng(71);
  ModelDocument doc;
  doc.model.family = Family::MCGHD;
  doc.model.pi = Eigen::Vector3d(0.2, 0.3, 0.5);
  for (int g = 0; g < 3; ++g) doc.model.components.push_back(oracle::random_component(3, rng));
  Scaling sc;
  sc.mean = Eigen::Vector3d(1.0, -2.0, 0.5);
  sc.sd = Eigen::Vector3d(2.0, 0.1, 3.0);
  doc.scaling = sc;
  doc.seed = 42;
  const ModelDocument back = from_json(to_json(doc));
  EXPECT_EQ(back.seed, 42u);
  ASSERT_TRUE(back.scaling.has_value());
  EXPECT_EQ(back.scaling->sd, sc.sd);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd x = Eigen::VectorXd::Random(3) * 4.0;
    EXPECT_NEAR(mixture_log_density(x, back.model), mixture_log_density(x, doc.model), 1e-12);
  }
}

TEST(ModelIo, MalformedDocuments) {
  EXPECT_THROW(from_json("{"), InputError);
  EXPECT_THROW(from_json(R"({"schema_version": 99})"), InputError);
}

TEST_F(CliTest, ClusterRecoversBlobs) {
  write_blobs("d.csv", 3);
  ASSERT_EQ(run_cli({"cluster", path("d.csv"), "--labels-col", "class", "--family", "mghd", "--G",
                     "1..3", "--max-iter", "80", "--out-dir", dir_.string()}),
            kExitOk)
      << err_.str();
  EXPECT_NE(out_.str().find("G=2"), std::string::npos) << out_.str();
  EXPECT_NE(out_.str().find("ari: 1"), std::string::npos) << out_.str();
  EXPECT_TRUE(fs::exists(path("scores.csv")));
  EXPECT_TRUE(fs::exists(path("model.json")));
  const std::vector<int> labels = read_labels(path("labels.csv"));
  EXPECT_EQ(labels.size(), 120u);
}

TEST_F(CliTest, SingleBlobSelectsOneComponent) {
  ScenarioSpec spec;
  spec.p = 2;
  spec.G = 1;
  spec.n_per_component = 120;
  spec.seed = 4;
  write_matrix(path("one.csv"), generate_scenario(spec).data, {"a", "b"});
  ASSERT_EQ(run_cli({"cluster", path("one.csv"), "--family", "mghd", "--max-iter", "60",
                     "--out-dir", dir_.string()}),
            kExitOk)
      << err_.str();
  EXPECT_NE(out_.str().find("G=1"), std::string::npos) << out_.str();
}

TEST_F(CliTest, MalformedRowReportsLine) {
  std::ofstream(path("bad.csv")) << "a,b\n1,2\n3\n4,5\n";
  EXPECT_EQ(run_cli({"cluster", path("bad.csv"), "--out-dir", dir_.string()}), kExitInput);
  EXPECT_NE(err_.str().find(":3:"), std::string::npos) << err_.str();
  std::ofstream(path("nan.csv")) << "a,b\n1,2\n3,abc\n";
  EXPECT_EQ(run_cli({"cluster", path("nan.csv"), "--out-dir", dir_.string()}), kExitInput);
  EXPECT_EQ(run_cli({"cluster", path("missing.csv")}), kExitInput);
  EXPECT_EQ(run_cli({"frobnicate"}), kExitInput);
}

TEST_F(CliTest, TooFewRowsIsAnInputError) {
  std::ofstream(path("tiny.csv")) << "a,b\n1,2\n3,4\n5,7\n";
  EXPECT_EQ(run_cli({"cluster", path("tiny.csv"), "--G", "2", "--out-dir", dir_.string()}),
            kExitInput);
}

TEST_F(CliTest, ClassifyPredictsUnlabeledRows) {
  write_blobs("semi.csv", 5, true);
  write_labels(path("truth.csv"), truth_);
  ASSERT_EQ(run_cli({"classify", path("semi.csv"), "--labels-col", "class", "--max-iter", "60",
                     "--truth", path("truth.csv"), "--out-dir", dir_.string()}),
            kExitOk)
      << err_.str();
  EXPECT_NE(out_.str().find("ari (unlabeled rows): 1"), std::string::npos) << out_.str();
  const std::string pred = slurp(path("predictions.csv"));
  EXPECT_EQ(std::count(pred.begin(), pred.end(), '\n'), 31);
}

TEST_F(CliTest, ClassifyWithEverythingLabeled) {
  write_blobs("full.csv", 6);
  EXPECT_EQ(run_cli({"classify", path("full.csv"), "--labels-col", "3", "--out-dir",
                     dir_.string()}),
            kExitOk);
  EXPECT_NE(out_.str().find("all rows are labeled"), std::string::npos);
}

TEST_F(CliTest, ClassifyRejectsLabelOutsideRange) {
  write_blobs("semi.csv", 7, true);
  EXPECT_EQ(run_cli({"classify", path("semi.csv"), "--labels-col", "class", "--G", "1",
                     "--out-dir", dir_.string()}),
            kExitInput);
  EXPECT_EQ(run_cli({"classify", path("semi.csv"), "--out-dir", dir_.string()}), kExitInput);
}

TEST_F(CliTest, DiscriminantAnalysis) {
  write_blobs("train.csv", 8);
  write_blobs("test.csv", 8);
  ASSERT_EQ(run_cli({"da", path("train.csv"), path("test.csv"), "--labels-col", "class",
                     "--family", "mmsghd", "--max-iter", "60", "--out-dir", dir_.string()}),
            kExitOk)
      << err_.str();
  EXPECT_NE(out_.str().find("ari (test rows): 1"), std::string::npos) << out_.str();
  EXPECT_EQ(run_cli({"da", path("train.csv"), path("nope.csv"), "--labels-col", "class"}),
            kExitInput);
}

TEST_F(CliTest, PredictReproducesFitLabels) {
  write_blobs("d.csv", 9);
  ASSERT_EQ(run_cli({"cluster", path("d.csv"), "--family", "mcghd", "--G", "2", "--scale",
                     "--max-iter", "40", "--out-dir", dir_.string()}),
            kExitOk)
      << err_.str();
  const std::string fitted = slurp(path("labels.csv"));
  const ModelDocument doc = read_model(path("model.json"));
  ASSERT_TRUE(doc.scaling.has_value());
  fs::create_directories(dir_ / "p");
  ASSERT_EQ(run_cli({"predict", path("model.json"), path("d.csv"), "--out-dir", path("p")}),
            kExitOk)
      << err_.str();
  EXPECT_EQ(slurp(path("p/labels.csv")), fitted);
}

TEST_F(CliTest, SimulateIsDeterministic) {
  fs::create_directories(dir_ / "a");
  fs::create_directories(dir_ / "b");
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(run_cli({"simulate", "--generator", "ghd", "--p", "3", "--G", "2", "--n", "20",
                       "--seed", "5", "--out-dir", path(sub)}),
              kExitOk)
        << err_.str();
  }
  EXPECT_EQ(slurp(path("a/data.csv")), slurp(path("b/data.csv")));
  EXPECT_EQ(slurp(path("a/truth.csv")), slurp(path("b/truth.csv")));
  const Dataset ds = read_dataset(path("a/data.csv"), {});
  EXPECT_EQ(ds.data.rows(), 40);
  EXPECT_EQ(ds.column_names, (std::vector<std::string>{"x1", "x2", "x3"}));
}

TEST_F(CliTest, ClusterIsDeterministic) {
  write_blobs("d.csv", 10);
  fs::create_directories(dir_ / "a");
  fs::create_directories(dir_ / "b");
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(run_cli({"cluster", path("d.csv"), "--G", "2", "--max-iter", "30", "--seed", "3",
                       "--out-dir", path(sub)}),
              kExitOk);
  }
  EXPECT_EQ(slurp(path("a/model.json")), slurp(path("b/model.json")));
  EXPECT_EQ(slurp(path("a/scores.csv")), slurp(path("b/scores.csv")));
}

TEST_F(CliTest, EvalReportsAriAndConfusion) {
  write_labels(path("a.csv"), {0, 0, 1, 1});
  write_labels(path("b.csv"), {0, 1, 0, 1});
  ASSERT_EQ(run_cli({"eval", path("a.csv"), path("b.csv")}), kExitOk);
  EXPECT_NE(out_.str().find("ari: -0.5"), std::string::npos) << out_.str();
  ASSERT_EQ(run_cli({"eval", path("a.csv"), path("b.csv"), "--json"}), kExitOk);
  EXPECT_NE(out_.str().find("\"misclassification\": 0.5"), std::string::npos) << out_.str();
}

TEST_F(CliTest, ContoursGrid) {
  write_blobs("d.csv", 11, false, false);
  ASSERT_EQ(run_cli({"cluster", path("d.csv"), "--family", "mghd", "--G", "2", "--max-iter",
                     "20", "--contours", "5", "--out-dir", dir_.string()}),
            kExitOk)
      << err_.str();
  const std::string grid = slurp(path("contours.csv"));
  EXPECT_EQ(std::count(grid.begin(), grid.end(), '\n'), 26);
}

TEST_F(CliTest, CsvOptions) {
  std::ofstream(path("semi.txt")) << "1;2;1\n3;4;?\n5;6;2\n";
  CsvOptions opt;
  opt.delimiter = ';';
  opt.header = HeaderMode::kNo;
  opt.label_column = "3";
  opt.na_marker = "?";
  const Dataset ds = read_dataset(path("semi.txt"), opt);
  EXPECT_EQ(ds.data.rows(), 3);
  EXPECT_EQ(ds.data.cols(), 2);
  EXPECT_EQ(ds.labels, (std::vector<int>{0, kUnlabeled, 1}));
}
