#include <gtest/gtest.h>

#include <filesystem>
#include <regex>

#include "gemmap/cli.hpp"
#include "support.hpp"

using namespace gemmap;
using namespace gemmap::test;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "gemmap");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("gemmap_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string tmp(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_F(Cli, SolveEvaluateValidateReport) {
    const auto hw = data("hardware/toy_4pe.json"), wl = data("workloads/small.json");
    const auto run = tmp("run.json");
    auto r = cli({"solve", "--hw", hw, "--workload", wl, "--out", run, "--threads", "2"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("case edp"), std::string::npos);

    r = cli({"evaluate", "--hw", hw, "--workload", wl, "--mapping", run});
    ASSERT_EQ(r.code, 0) << r.err;
    const json ev = json::parse(r.out);
    const RunRecord rec = load_run(run);
    ASSERT_EQ(ev.size(), rec.gemms.size());
    for (std::size_t i = 0; i < ev.size(); ++i)
        EXPECT_EQ(ev[i]["breakdown"]["e_total_pj"].get<double>(), rec.gemms[i].breakdown.e_total_abs);

    r = cli({"validate", "--hw", hw, "--workload", wl, "--mapping", run});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("a: feasible"), std::string::npos);

    r = cli({"validate", "--hw", data("hardware/eyeriss_like.json"), "--workload", wl, "--mapping", run});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("pe-count"), std::string::npos);

    r = cli({"report", "--runs", run, "--baseline", run});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("normalized_case_edp"), std::string::npos);
    std::istringstream lines(r.out);
    std::string line;
    std::size_t normalized = 0;
    while (std::getline(lines, line))
        if (line.rfind(run + ",", 0) == 0 && line.size() > 2 && line.substr(line.size() - 2) == ",1") ++normalized;
    EXPECT_EQ(normalized, 1u + rec.gemms.size());
}

TEST_F(Cli, InfeasibleExitsOne) {
    const auto r = cli({"solve", "--hw", data("hardware/eyeriss_like.json"), "--workload", data("workloads/unit.json"),
                        "--out", tmp("u.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("pe-count"), std::string::npos);
}

TEST_F(Cli, ConfigErrorsExitTwo) {
    EXPECT_EQ(cli({"solve", "--hw", tmp("missing.json"), "--workload", data("workloads/small.json")}).code, 2);
    EXPECT_EQ(cli({"solve", "--hw", data("workloads/small.json"), "--workload", data("workloads/small.json")}).code, 2);
    EXPECT_EQ(cli({"bogus"}).code, 2);
    EXPECT_EQ(cli({}).code, 2);
    std::ofstream(tmp("bad.json")) << "{\"schema\": ";
    const auto r = cli({"validate", "--hw", tmp("bad.json"), "--workload", data("workloads/small.json")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("parse error"), std::string::npos);
    EXPECT_EQ(cli({"expand", "--model", data("models/llama_3_2_1b.json")}).code, 2);
    EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST_F(Cli, ExpandWritesWorkload) {
    const auto out = tmp("w.json");
    ASSERT_EQ(cli({"expand", "--model", data("models/qwen3_0_6b.json"), "--seq-len", "256", "--out", out}).code, 0);
    const auto w = std::get<Workload>(load_workload(out));
    ASSERT_EQ(w.gemms.size(), 8u);
    EXPECT_EQ(w.gemms[0].dims, (Extents{{256, 16 * 128, 1024}}));
    EXPECT_EQ(w.gemms[2].weight, 28u * 16u);
}

TEST_F(Cli, ThreadCountDoesNotChangeRecord) {
    const auto a = tmp("a.json"), b = tmp("b.json");
    const std::vector<std::string> base{"solve", "--hw", data("hardware/toy_4pe.json"), "--workload",
                                        data("workloads/small.json"), "--leak"};
    auto args = base;
    args.insert(args.end(), {"--threads", "1", "--out", a});
    ASSERT_EQ(cli(args).code, 0);
    args = base;
    args.insert(args.end(), {"--threads", "3", "--out", b});
    ASSERT_EQ(cli(args).code, 0);
    const std::regex wall("\"wall_time_s\": [^,\\n]*");
    EXPECT_EQ(std::regex_replace(slurp(a), wall, ""), std::regex_replace(slurp(b), wall, ""));
}

TEST_F(Cli, VerifySmallSweep) {
    const auto r = cli({"verify", "--max-dims", "4"});
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("verify: ok"), std::string::npos);
}

TEST_F(Cli, MappingFileMustCoverWorkload) {
    MappingSet s;
    s.entries.emplace_back("a", Mapping{});
    write_json_file(tmp("m.json"), mapping_set_to_json(s));
    const auto r = cli({"evaluate", "--hw", data("hardware/toy_4pe.json"), "--workload", data("workloads/small.json"),
                        "--mapping", tmp("m.json")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("no mapping for GEMM 'b'"), std::string::npos);
}
