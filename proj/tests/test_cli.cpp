#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mvm/mvm.hpp"

namespace mvm {
namespace {

namespace fs = std::filesystem;

struct Result {
    int status = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::current_path() / "cli_scratch" / info->name();
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    Result run(const std::string& args) const {
        const auto out = path("stdout.txt"), err = path("stderr.txt");
        const std::string cmd = std::string("\"") + MVM_CLI_PATH + "\" " + args + " >\"" +
                                out.string() + "\" 2>\"" + err.string() + "\"";
        const int raw = std::system(cmd.c_str());
        Result r;
        r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    std::string synth(const std::string& name, const std::string& extra = "") const {
        const auto p = path(name);
        const auto r = run("synth --dims 4,3,5 --k 2 --n 60 --density 0.5 --seed 5 --out " +
                           p.string() + " " + extra);
        EXPECT_EQ(r.status, 0) << r.err;
        return p.string();
    }

    fs::path dir_;
};

std::size_t count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

TEST_F(CliTest, EpochsZeroWritesTheInitialModel) {
    const auto data = synth("d.txt");
    const auto r = run("train --data " + data + " --model-out " + path("m.txt").string() +
                       " --epochs 0 --k 3 --seed 9");
    ASSERT_EQ(r.status, 0) << r.err;
    TrainConfig c;
    c.k = 3;
    c.seed = 9;
    EXPECT_EQ(slurp(path("m.txt")), serialize_model(init_model(ViewSchema({4, 3, 5}), c)));
}

TEST_F(CliTest, TrainReportsObjectiveTrace) {
    const auto data = synth("d.txt");
    const auto r = run("train --data " + data + " --model-out " + path("m.txt").string() +
                       " --epochs 3 --tol 0 --sigma 0.1 --eta 0.01");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("epoch\t3\t"), std::string::npos);
    EXPECT_NE(r.out.find("final_objective\t"), std::string::npos);
    EXPECT_NE(r.out.find("converged\tfalse"), std::string::npos);
}

TEST_F(CliTest, PredictMatchesInProcessScoresExactly) {
    const auto data = synth("d.txt");
    ASSERT_EQ(run("train --data " + data + " --model-out " + path("m.txt").string() +
                  " --epochs 2 --k 2 --sigma 0.1")
                  .status,
              0);
    const auto r = run("predict --model " + path("m.txt").string() + " --data " + data);
    ASSERT_EQ(r.status, 0) << r.err;
    const auto model = deserialize_model(slurp(path("m.txt")));
    std::string expect;
    const auto parsed = parse_dataset(slurp(data));
    for (const auto& x : parsed.instances())
        expect += format_double(predict_any(model, x)) + "\n";
    EXPECT_EQ(r.out, expect);

    ASSERT_EQ(run("predict --model " + path("m.txt").string() + " --data " + data + " --out " +
                  path("p.txt").string())
                  .status,
              0);
    EXPECT_EQ(slurp(path("p.txt")), expect);
}

TEST_F(CliTest, PredictOnEmptyInputPrintsNothing) {
    const auto data = synth("d.txt");
    ASSERT_EQ(run("train --data " + data + " --model-out " + path("m.txt").string() + " --epochs 0")
                  .status,
              0);
    spit(path("empty.txt"), "");
    spit(path("header.txt"), "@schema 4 3 5\n");
    for (const char* f : {"empty.txt", "header.txt"}) {
        const auto r = run("predict --model " + path("m.txt").string() + " --data " + path(f).string());
        EXPECT_EQ(r.status, 0) << r.err;
        EXPECT_EQ(r.out, "");
    }
}

TEST_F(CliTest, SchemaMismatchIsOneLineError) {
    const auto data = synth("d.txt");
    ASSERT_EQ(run("train --data " + data + " --model-out " + path("m.txt").string() + " --epochs 0")
                  .status,
              0);
    spit(path("other.txt"), "@schema 4 3\n1 1:1:1\n");
    const auto r = run("predict --model " + path("m.txt").string() + " --data " +
                       path("other.txt").string());
    EXPECT_NE(r.status, 0);
    EXPECT_EQ(count_lines(r.err), 1u) << r.err;
    EXPECT_NE(r.err.find("schema"), std::string::npos);
}

TEST_F(CliTest, EvalOnTeacherIsPerfect) {
    const auto data = synth("d.txt", "--teacher-out " + path("t.txt").string());
    const auto r = run("eval --model " + path("t.txt").string() + " --data " + data +
                       " --metrics acc,auc");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out.rfind("acc\t1\tauc\t", 0), 0u) << r.out;
    EXPECT_EQ(count_lines(r.out), 1u);
}

TEST_F(CliTest, AucOnSingleClassIsAnError) {
    const auto data = synth("d.txt", "--teacher-out " + path("t.txt").string());
    spit(path("pos.txt"), "@schema 4 3 5\n1 1:1:1\n1 2:2:1\n");
    const auto r = run("eval --model " + path("t.txt").string() + " --data " +
                       path("pos.txt").string() + " --metrics auc");
    EXPECT_NE(r.status, 0);
    EXPECT_EQ(count_lines(r.err), 1u) << r.err;
}

TEST_F(CliTest, GradcheckPasses) {
    for (const char* loss : {"square", "logit", "hinge"}) {
        const auto r = run(std::string("gradcheck --m 3 --dims 4,3,5 --k 2 --trials 50 --loss ") + loss);
        EXPECT_EQ(r.status, 0) << loss << ": " << r.out << r.err;
        EXPECT_NE(r.out.find("max_relative_error\t"), std::string::npos);
    }
    EXPECT_EQ(run("gradcheck --m 2 --reg l1 --epsilon 0.01 --lambda 0.1").status, 0);
}

TEST_F(CliTest, SynthIsDeterministic) {
    const auto a = synth("a.txt");
    const auto b = synth("b.txt");
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(slurp(a).rfind("@schema 4 3 5\n", 0), 0u);
    EXPECT_EQ(count_lines(slurp(a)), 61u);
}

TEST_F(CliTest, LambdaGridNamesTheChosenValue) {
    const auto data = synth("d.txt");
    const auto valid = path("v.txt");
    ASSERT_EQ(run("synth --dims 4,3,5 --k 2 --n 30 --density 0.5 --seed 6 --out " + valid.string())
                  .status,
              0);
    const auto r = run("train --data " + data + " --valid " + valid.string() + " --model-out " +
                       path("m.txt").string() + " --epochs 3 --lambda-grid 0.001,0.1");
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_NE(r.out.find("lambda\t0.001\t"), std::string::npos);
    EXPECT_NE(r.out.find("lambda\t0.1\t"), std::string::npos);
    const auto at = r.out.find("selected_lambda\t");
    ASSERT_NE(at, std::string::npos);
    const auto chosen = r.out.substr(at + 16, r.out.find('\n', at) - at - 16);
    EXPECT_TRUE(chosen == "0.001" || chosen == "0.1") << chosen;
}

TEST_F(CliTest, BaselinesTrainAndPredict) {
    const auto data = synth("d.txt");
    for (const char* kind : {"linear", "mvfm"}) {
        const auto m = path(std::string(kind) + ".txt").string();
        ASSERT_EQ(run("train --data " + data + " --model-out " + m + " --epochs 2 --baseline " + kind)
                      .status,
                  0);
        EXPECT_EQ(family_name(deserialize_model(slurp(m))), kind);
        const auto r = run("predict --model " + m + " --data " + data);
        EXPECT_EQ(r.status, 0);
        EXPECT_EQ(count_lines(r.out), 60u);
    }
}

TEST_F(CliTest, UsageErrorsAreOneLine) {
    for (const char* args : {"train --bogus 1", "predict --model", "frobnicate", "",
                             "train --data nowhere.txt --model-out m.txt",
                             "synth --dims 4,x --out s.txt", "train --loss exp --data a --model-out b"}) {
        const auto r = run(args);
        EXPECT_NE(r.status, 0) << args;
        EXPECT_EQ(count_lines(r.err), 1u) << args << ": " << r.err;
    }
}

TEST_F(CliTest, CorruptModelIsRejected) {
    const auto data = synth("d.txt");
    spit(path("bad.txt"), "mvm-model 7\n");
    const auto r = run("predict --model " + path("bad.txt").string() + " --data " + data);
    EXPECT_NE(r.status, 0);
    EXPECT_EQ(count_lines(r.err), 1u);
}

}  // namespace
}  // namespace mvm
