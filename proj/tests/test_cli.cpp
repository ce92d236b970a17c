#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    auto p = fs::temp_directory_path() / ("intricacy_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Result run(const std::string& args, const std::string& env = "")
{
    fs::path dir = scratch("io");
    std::string cmd = env + " \"" INTRICACY_CLI "\" " + args + " >" + (dir / "out").string() + " 2>" +
                      (dir / "err").string();
    int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "out");
    r.err = slurp(dir / "err");
    return r;
}

fs::path write_config(const std::string& name, const std::string& text)
{
    fs::path p = fs::temp_directory_path() / ("intricacy_cli_" + name + ".json");
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST(Cli, HelpAndVersion)
{
    EXPECT_EQ(run("--help").code, 0);
    Result v = run("--version");
    EXPECT_EQ(v.code, 0);
    EXPECT_FALSE(v.out.empty());
}

TEST(Cli, RunsDefaultEstimate)
{
    Result r = run("estimate");
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("\"fill_time\""), std::string::npos);
}

TEST(Cli, ConfigErrorExitsOneWithJsonReport)
{
    fs::path cfg = write_config("bad", R"({"field": {"points": 2, "foo": 1}})");
    Result r = run("field -c " + cfg.string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("\"status\": \"config_error\""), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("\"exit_code\": 1"), std::string::npos);
    EXPECT_NE(r.err.find("\"scenario\": \"field\""), std::string::npos);
    EXPECT_NE(r.err.find("field.foo: unknown key"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, KindMismatchAndBadOptions)
{
    fs::path cfg = write_config("mismatch", R"({"kind": "collapse"})");
    EXPECT_EQ(run("field -c " + cfg.string()).code, 1);
    EXPECT_EQ(run("field -c /nonexistent/file.json").code, 1);
    EXPECT_EQ(run("field -f xml").code, 1);
    EXPECT_EQ(run("nosuchkind").code, 1);
    EXPECT_EQ(run("").code, 1);
}

TEST(Cli, NumericalErrorExitsTwo)
{
    fs::path cfg = write_config("unstable", R"({"sectors": {"steps": 5, "norm_tolerance": 1e-300}})");
    Result r = run("sectors -c " + cfg.string());
    EXPECT_EQ(r.code, 2) << r.err;
    EXPECT_NE(r.err.find("\"status\": \"numerical_error\""), std::string::npos) << r.err;
}

TEST(Cli, RerunIsByteIdentical)
{
    fs::path cfg = write_config("pre", R"({"predecoherence": {"size": 24, "samples": 3}})");
    fs::path a = scratch("a"), b = scratch("b");
    ASSERT_EQ(run("predecoherence -q -s 9 -c " + cfg.string() + " -o " + a.string()).code, 0);
    ASSERT_EQ(run("predecoherence -q -s 9 -c " + cfg.string() + " -o " + b.string()).code, 0);
    for (const char* f : {"predecoherence_samples.csv", "predecoherence_summary.json"}) {
        ASSERT_TRUE(fs::exists(a / f)) << f;
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
    EXPECT_TRUE(fs::exists(a / "manifest.json"));
    fs::path c = scratch("c");
    ASSERT_EQ(run("predecoherence -q -s 10 -c " + cfg.string() + " -o " + c.string()).code, 0);
    EXPECT_NE(slurp(a / "predecoherence_samples.csv"), slurp(c / "predecoherence_samples.csv"));
}

TEST(Cli, OutputDirectoryFromEnvironment)
{
    fs::path d = scratch("env");
    Result r = run("estimate -q -f csv", "INTRICACY_OUTPUT_DIR=" + d.string());
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    EXPECT_TRUE(fs::exists(d / "estimate.csv"));
    EXPECT_FALSE(fs::exists(d / "estimate_summary.json"));
    EXPECT_TRUE(fs::exists(d / "manifest.json"));
}
