#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "globalrag/corpus.hpp"
#include "globalrag/evaluation.hpp"
#include "globalrag/jsonl.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("globalrag_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return globalrag::cli::run(args, out_, err_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::ostringstream out_, err_;
};

std::string slurp(const std::string& p) { return globalrag::jsonl::read_file(p); }

}  // namespace

TEST_F(Cli, GenCorpusIsDeterministicPerSeed) {
  ASSERT_EQ(run({"gen-corpus", "--docs", "50", "--seed", "3", "-o", path("a.jsonl")}), 0);
  ASSERT_EQ(run({"gen-corpus", "--docs", "50", "--seed", "3", "-o", path("b.jsonl")}), 0);
  ASSERT_EQ(run({"gen-corpus", "--docs", "50", "--seed", "4", "-o", path("c.jsonl")}), 0);
  EXPECT_EQ(slurp(path("a.jsonl")), slurp(path("b.jsonl")));
  EXPECT_NE(slurp(path("a.jsonl")), slurp(path("c.jsonl")));
  EXPECT_EQ(globalrag::ingest_jsonl(path("a.jsonl")).size(), 50u);
}

TEST_F(Cli, RefusesToOverwriteWithoutForce) {
  ASSERT_EQ(run({"gen-corpus", "--docs", "5", "-o", path("a.jsonl")}), 0);
  EXPECT_EQ(run({"gen-corpus", "--docs", "6", "-o", path("a.jsonl")}), 1);
  EXPECT_NE(err_.str().find("--force"), std::string::npos);
  EXPECT_EQ(globalrag::ingest_jsonl(path("a.jsonl")).size(), 5u);
  EXPECT_EQ(run({"gen-corpus", "--docs", "6", "--force", "-o", path("a.jsonl")}), 0);
  EXPECT_EQ(globalrag::ingest_jsonl(path("a.jsonl")).size(), 6u);
}

TEST_F(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"gen-corpus", "--bogus", "1", "-o", path("x")}), 2);
  EXPECT_EQ(run({"gen-corpus"}), 2);
  EXPECT_EQ(run({"gen-corpus", "--docs", "0", "-o", path("x")}), 2);
  EXPECT_EQ(run({"gen-corpus", "--help"}), 0);
  EXPECT_FALSE(fs::exists(path("x")));
}

TEST_F(Cli, MissingInputIsAModuleError) {
  EXPECT_EQ(run({"gen-dataset", "--corpus", path("none.jsonl"), "-o", path("d.jsonl")}), 1);
}

TEST_F(Cli, FlagsOverrideConfigWhichOverridesDefaults) {
  {
    std::ofstream cfg(path("cfg.json"));
    cfg << R"({"docs": 12, "seed": 9})";
  }
  ASSERT_EQ(run({"gen-corpus", "--config", path("cfg.json"), "-o", path("a.jsonl")}), 0);
  EXPECT_EQ(globalrag::ingest_jsonl(path("a.jsonl")).size(), 12u);
  ASSERT_EQ(run({"gen-corpus", "--config", path("cfg.json"), "--docs", "4", "-o", path("b.jsonl")}),
            0);
  EXPECT_EQ(globalrag::ingest_jsonl(path("b.jsonl")).size(), 4u);
  ASSERT_EQ(run({"gen-corpus", "--docs", "4", "--seed", "9", "-o", path("c.jsonl")}), 0);
  EXPECT_EQ(slurp(path("b.jsonl")), slurp(path("c.jsonl")));
  {
    std::ofstream cfg(path("bad.json"));
    cfg << R"({"no_such_option": 1})";
  }
  EXPECT_EQ(run({"gen-corpus", "--config", path("bad.json"), "-o", path("d.jsonl")}), 2);
}

TEST_F(Cli, GoldRetrievalRunScoresPerfectly) {
  ASSERT_EQ(run({"gen-corpus", "--docs", "300", "--seed", "2", "-o", path("c.jsonl")}), 0);
  ASSERT_EQ(run({"gen-dataset", "--corpus", path("c.jsonl"), "--count", "40", "--seed", "2", "-o",
                 path("d.jsonl")}),
            0);
  EXPECT_TRUE(fs::exists(path("d.jsonl.report.json")));
  ASSERT_EQ(run({"run", "--corpus", path("c.jsonl"), "--dataset", path("d.jsonl"), "--retriever",
                 "gold", "--k", "50", "-o", path("t.jsonl")}),
            0)
      << err_.str();
  ASSERT_EQ(run({"eval", "--traces", path("t.jsonl"), "--dataset", path("d.jsonl"), "--k", "50",
                 "-o", path("r.json")}),
            0);
  EXPECT_NE(out_.str().find("TopK"), std::string::npos);
  const auto report = globalrag::report_from_json(nlohmann::json::parse(slurp(path("r.json"))));
  EXPECT_DOUBLE_EQ(*report.micro_avg.f1, 1.0);
  EXPECT_DOUBLE_EQ(*report.micro_avg.d_f1, 1.0);
  ASSERT_EQ(run({"report", "--input", path("r.json"), "--format", "text"}), 0);
  EXPECT_NE(out_.str().find("100.00"), std::string::npos);
}

TEST_F(Cli, DenseRunNeedsMatchingEmbedder) {
  ASSERT_EQ(run({"gen-corpus", "--docs", "200", "-o", path("c.jsonl")}), 0);
  ASSERT_EQ(run({"gen-dataset", "--corpus", path("c.jsonl"), "--count", "8", "-o", path("d.jsonl")}),
            0);
  ASSERT_EQ(run({"index", "--corpus", path("c.jsonl"), "--dim", "64", "-o", path("i.jsonl")}), 0);
  EXPECT_EQ(run({"run", "--corpus", path("c.jsonl"), "--dataset", path("d.jsonl"), "--index",
                 path("i.jsonl"), "--embedder", "hashing-d32-s0", "-o", path("t.jsonl")}),
            1);
  EXPECT_NE(err_.str().find("index was built with"), std::string::npos);
  EXPECT_EQ(run({"run", "--corpus", path("c.jsonl"), "--dataset", path("d.jsonl"), "--index",
                 path("i.jsonl"), "-o", path("t.jsonl")}),
            0)
      << err_.str();
}

TEST_F(Cli, SweepWritesOnePointPerValue) {
  ASSERT_EQ(run({"gen-corpus", "--docs", "200", "-o", path("c.jsonl")}), 0);
  ASSERT_EQ(run({"gen-dataset", "--corpus", path("c.jsonl"), "--count", "12", "-o", path("d.jsonl")}),
            0);
  ASSERT_EQ(run({"index", "--corpus", path("c.jsonl"), "-o", path("i.jsonl")}), 0);
  ASSERT_EQ(run({"sweep", "--corpus", path("c.jsonl"), "--dataset", path("d.jsonl"), "--index",
                 path("i.jsonl"), "--axis", "retrieve_k", "--values", "5,10", "-o", path("sw")}),
            0)
      << err_.str();
  for (const auto* f : {"sw/point_5.traces.jsonl", "sw/point_10.report.json", "sw/sweep.csv"}) {
    EXPECT_TRUE(fs::exists(path(f))) << f;
  }
  const auto csv = slurp(path("sw/sweep.csv"));
  EXPECT_TRUE(csv.starts_with("axis,value,task,f1,d_f1,n\n"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 6);
  EXPECT_EQ(run({"sweep", "--corpus", path("c.jsonl"), "--dataset", path("d.jsonl"), "--index",
                 path("i.jsonl"), "--axis", "retrieve_k", "--values", "0", "--force", "-o",
                 path("sw")}),
            2);
}
