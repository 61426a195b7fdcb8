#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "xdparse/treebank_io.hpp"

namespace xdparse {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("xdparse_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path file(const std::string& name, const std::string& text) {
    auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  RunResult run(const std::string& args) {
    auto err = dir_ / "stderr.txt";
    std::string cmd = std::string(XDPARSE_CLI_PATH) + " " + args + " 2>" + err.string();
    RunResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
  }

  std::string path(const fs::path& p) { return "'" + p.string() + "'"; }

  fs::path dir_;
};

std::string treebank(const std::vector<ParseTree>& trees) {
  std::string out;
  for (const auto& t : trees) out += to_bracketed(t) + "\n";
  return out;
}

TEST_F(Cli, UsageAndUnknownCommand) {
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("frobnicate").exit_code, 2);
  auto help = run("--help");
  EXPECT_EQ(help.exit_code, 0);
  EXPECT_NE(help.out.find("run-experiment"), std::string::npos);
  EXPECT_EQ(run("train --bogus-flag 1").exit_code, 2);
}

TEST_F(Cli, TrainWithMissingDevWritesNothing) {
  auto train = file("train.mrg", treebank(testing::toy_corpus(1, 5)));
  auto model = dir_ / "model.bin";
  auto r = run("train --parser chart --train " + path(train) + " --dev " + path(dir_ / "absent.mrg") + " --out " +
               path(model));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("--dev"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(model));
  EXPECT_FALSE(fs::exists(dir_ / "model.bin.log"));
}

TEST_F(Cli, TrainParseEvalRoundTrip) {
  auto all = testing::toy_corpus(2, 120);
  std::vector<ParseTree> train(all.begin(), all.begin() + 100), dev(all.begin() + 100, all.end());
  auto train_p = file("train.mrg", treebank(train));
  auto dev_p = file("dev.mrg", treebank(dev));
  auto cfg = file("train.ini", "[train]\nmax_epochs = 3\ndecoder_lr = 0.05\nhash_bits = 18\n");
  std::string tagged;
  for (const auto& t : dev) {
    std::string line;
    for (const auto& w : leaves(t)) line += (line.empty() ? "" : " ") + w.form + "_" + w.tag;
    tagged += line + "\n";
  }
  auto input = file("dev.tagged", tagged);

  for (const char* parser : {"chart", "inorder"}) {
    auto model = dir_ / (std::string(parser) + ".bin");
    auto r = run(std::string("train --parser ") + parser + " --train " + path(train_p) + " --dev " + path(dev_p) +
                 " --config " + path(cfg) + " --seed 3 --out " + path(model));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    ASSERT_TRUE(fs::exists(model));
    auto log = slurp(fs::path(model.string() + ".log"));
    EXPECT_EQ(log.rfind("epoch\tupdates", 0), 0u) << log;

    auto pred = dir_ / (std::string(parser) + ".pred");
    r = run("parse --model " + path(model) + " --input " + path(input) + " --out " + path(pred));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    auto e = run("eval --gold " + path(dev_p) + " --pred " + path(pred) + " --exact-match");
    ASSERT_EQ(e.exit_code, 0) << e.err;
    double f1 = 0;
    std::istringstream lines(e.out);
    for (std::string key; lines >> key;) {
      if (key == "f1") lines >> f1;
    }
    EXPECT_GE(f1, 95.0) << parser << "\n" << e.out;

    // Same flags, same bytes.
    auto again = dir_ / (std::string(parser) + "2.bin");
    r = run(std::string("train --parser ") + parser + " --train " + path(train_p) + " --dev " + path(dev_p) +
            " --config " + path(cfg) + " --seed 3 --out " + path(again));
    ASSERT_EQ(r.exit_code, 0);
    EXPECT_EQ(slurp(model), slurp(again));
  }
}

TEST_F(Cli, ParseOneWordAndMalformedInput) {
  auto all = testing::toy_corpus(3, 40);
  auto train_p = file("train.mrg", treebank(all));
  auto cfg = file("train.ini", "[train]\nmax_epochs = 1\nhash_bits = 14\n");
  auto model = dir_ / "m.bin";
  ASSERT_EQ(run("train --parser inorder --train " + path(train_p) + " --dev " + path(train_p) + " --config " +
                path(cfg) + " --out " + path(model))
                .exit_code,
            0);

  auto one = file("one.tagged", "dogs_NN\n");
  auto r = run("parse --model " + path(model) + " --input " + path(one));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);
  auto tree = read_bracketed(r.out).trees.at(0);
  EXPECT_EQ(leaves(tree), (std::vector<Word>{{"dogs", "NN"}}));

  auto bad = file("bad.tagged", "the_DT dog_NN\nthe dog_NN\n");
  r = run("parse --model " + path(model) + " --input " + path(bad));
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(Cli, EvalExamples) {
  auto gold = file("gold.mrg", "(S (NP (DT a) (NN b)) (VP (VBZ c)))\n");
  auto pred = file("pred.mrg", "(S (NP (DT a) (NN b)) (VBZ c))\n");
  auto self = run("eval --gold " + path(gold) + " --pred " + path(gold) + " --exact-match");
  ASSERT_EQ(self.exit_code, 0) << self.err;
  EXPECT_NE(self.out.find("f1\t100.000000"), std::string::npos) << self.out;
  EXPECT_NE(self.out.find("exact_match\t100.000000"), std::string::npos) << self.out;

  auto hand = run("eval --gold " + path(gold) + " --pred " + path(pred));
  ASSERT_EQ(hand.exit_code, 0);
  EXPECT_NE(hand.out.find("precision\t100.000000"), std::string::npos) << hand.out;
  EXPECT_NE(hand.out.find("recall\t66.666667"), std::string::npos) << hand.out;
  EXPECT_NE(hand.out.find("f1\t80.000000"), std::string::npos) << hand.out;
  EXPECT_EQ(run("eval --gold " + path(gold) + " --pred " + path(pred) + " --min-span 0").out, hand.out);

  auto with_params = run("eval --gold " + path(gold) + " --pred " + path(pred) + " --params " +
                         path(fs::path(XDPARSE_SOURCE_DIR) / "params" / "default.prm"));
  EXPECT_EQ(with_params.exit_code, 0) << with_params.err;
  EXPECT_EQ(with_params.out, hand.out);

  auto two = file("two.mrg", "(S (NN a))\n(S (NN b))\n");
  auto mismatch = run("eval --gold " + path(gold) + " --pred " + path(two));
  EXPECT_EQ(mismatch.exit_code, 2);
  EXPECT_NE(mismatch.err.find("sentence count"), std::string::npos) << mismatch.err;
}

TEST_F(Cli, OracleReportsViolationsAndHandlesEmptyInput) {
  auto tb = file("chain.mrg",
                 "(TOP (S (NP (DT a) (NN b)) (VP (VBZ c))))\n"
                 "(TOP (A (B (C (D (NN x))))))\n");
  auto dump = dir_ / "actions.txt";
  auto r = run("oracle --treebank " + path(tb) + " --out " + path(dump));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("violation\t1\tunary chain of length 5 exceeds limit 4"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("round_trip_ok\t1"), std::string::npos) << r.out;
  auto lines = slurp(dump);
  EXPECT_EQ(lines.substr(0, lines.find('\n')), "SHIFT PJ(NP) SHIFT REDUCE PJ(S) SHIFT PJ(VP) REDUCE REDUCE PJ(TOP) "
                                                "REDUCE FINISH");

  auto empty = file("empty.mrg", "");
  auto empty_dump = dir_ / "empty.txt";
  r = run("oracle --treebank " + path(empty) + " --out " + path(empty_dump));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  ASSERT_TRUE(fs::exists(empty_dump));
  EXPECT_EQ(slurp(empty_dump), "");
}

TEST_F(Cli, ReportRendersGapTable) {
  auto table = file("t1.tsv",
                    "corpus\tBerkeley\tChart\n"
                    "WSJ Test\t90.06\t93.27\n"
                    "Genia All\t79.11\t82.68\n");
  auto r = run("report --f1-table " + path(table) + " --reference 'WSJ Test'");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("+110.2%"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("+157.4%"), std::string::npos) << r.out;
  EXPECT_EQ(run("report --f1-table " + path(table)).exit_code, 2);
  EXPECT_EQ(run("report --f1-table " + path(table) + " --reference Nope").exit_code, 2);
}

TEST_F(Cli, RunExperimentWritesReports) {
  auto all = testing::ambiguous_corpus(4, 90);
  std::vector<ParseTree> train(all.begin(), all.begin() + 60), dev(all.begin() + 60, all.begin() + 70),
      test(all.begin() + 70, all.end()), shifted;
  for (const auto& t : test) shifted.push_back(testing::rename_labels(t, {{"VP", "VX"}}));
  file("train.mrg", treebank(train));
  file("dev.mrg", treebank(dev));
  file("in.mrg", treebank(test));
  file("out.mrg", treebank(shifted));
  auto cfg = file("exp.ini",
                  "[experiment]\nname = cli\nparser = chart\ntrain = train.mrg\ndev = dev.mrg\nin_domain = in\n"
                  "[corpora]\nin = in.mrg\nout = out.mrg\n"
                  "[train]\nseeds = 1 2\nmax_epochs = 1\nhash_bits = 14\n");
  auto out = dir_ / "report";
  fs::create_directories(out);
  auto r = run("run-experiment --config " + path(cfg) + " --out-dir " + path(out));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* f : {"report.tsv", "f1.txt", "exact_match.txt", "curves.txt"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_NE(slurp(out / "f1.txt").find("+0.0%"), std::string::npos);
  EXPECT_EQ(run("run-experiment --config " + path(cfg) + " --out-dir " + path(dir_ / "nodir")).exit_code, 2);
}

}  // namespace
}  // namespace xdparse
