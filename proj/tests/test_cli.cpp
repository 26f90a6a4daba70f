// Copyright 2026 The permsym Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "permsym/builtin_models.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
    int status;
    std::string out;
};

/// Runs the CLI with stderr folded into stdout.
Result cli(const std::string& args) {
    const std::string cmd = std::string("\"") + PERMSYM_CLI_PATH + "\" " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return {-1, ""};
    std::string out;
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
    const int st = pclose(p);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string model(const char* name) { return (fs::path(PERMSYM_MODEL_DIR) / name).string(); }

/// Report lines that do not depend on timing.
std::string stable_lines(const std::string& out) {
    std::istringstream in(out);
    std::string kept;
    for (std::string l; std::getline(in, l);) {
        if (l.rfind("time [s]", 0) == 0 || l.rfind("wrote", 0) == 0) continue;
        kept += l + "\n";
    }
    return kept;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("permsym_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path dir_;
};

} // namespace

TEST_F(CliTest, RunWritesEveryStep) {
    const auto r = cli("run " + model("ex1.model") + " --monitor-every 1 --t-end 0.05 --out-dir " + dir_.string());
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_NE(r.out.find("basis size      160"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("5 accepted"), std::string::npos) << r.out;
    std::istringstream in(slurp(dir_ / "ex1.dat"));
    int rows = 0;
    for (std::string l; std::getline(in, l);) rows += !l.empty() && l[0] != '#';
    EXPECT_EQ(rows, 6);
}

TEST_F(CliTest, RunsAreDeterministic) {
    const auto a = cli("examples ex4 --t-end 1 --out-dir " + (dir_ / "a").string());
    const auto b = cli("examples ex4 --t-end 1 --out-dir " + (dir_ / "b").string());
    ASSERT_EQ(a.status, 0) << a.out;
    ASSERT_EQ(b.status, 0) << b.out;
    EXPECT_EQ(stable_lines(a.out), stable_lines(b.out));
    const auto fa = slurp(dir_ / "a" / "ex4.dat");
    EXPECT_FALSE(fa.empty());
    EXPECT_EQ(fa, slurp(dir_ / "b" / "ex4.dat"));
}

TEST_F(CliTest, PruneFlagShrinksTheSolve) {
    const auto r = cli("examples ex3b --t-end 0.05 --prune --out-dir " + dir_.string());
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_NE(r.out.find("basis size      17820"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("after pruning   2520"), std::string::npos) << r.out;
}

TEST_F(CliTest, SteadyFlag) {
    const auto r = cli("examples ex1 --steady --out-dir " + dir_.string());
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_NE(r.out.find("steady residual"), std::string::npos) << r.out;
    const auto text = slurp(dir_ / "ex1.dat");
    EXPECT_NE(text.find("\ninf "), std::string::npos);
}

TEST(Cli, Dims) {
    const auto two = cli("dims --levels 2 --max-n 4");
    ASSERT_EQ(two.status, 0) << two.out;
    EXPECT_NE(two.out.find("\n3 64 20\n"), std::string::npos) << two.out;
    EXPECT_NE(two.out.find("\n4 256 35\n"), std::string::npos) << two.out;
    const auto three = cli("dims --levels 3 --max-n 2");
    EXPECT_NE(three.out.find("\n2 81 45 15\n"), std::string::npos) << three.out;
    const auto big = cli("dims --levels 3 --max-n 40");
    EXPECT_NE(big.out.find("\n40 overflow "), std::string::npos) << big.out;
}

TEST(Cli, VerifyPassesOnExample) {
    const auto r = cli("verify ex1 --t-end 2");
    EXPECT_EQ(r.status, 0) << r.out;
    EXPECT_NE(r.out.find("(pass, tolerance"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("N=2"), std::string::npos) << r.out;
}

TEST(Cli, ExamplesPrint) {
    const auto r = cli("examples ex2 --print");
    ASSERT_EQ(r.status, 0);
    EXPECT_EQ(r.out, std::string(*permsym::builtin::find_model("ex2")));
}

TEST_F(CliTest, BadModelFails) {
    const auto bad = dir_ / "bad.model";
    std::ofstream(bad) << "[system]\nN = 2\nlevels = 2\ndims = n11 n21\n";
    const auto r = cli("run " + bad.string() + " --out-dir " + dir_.string());
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.out.find("error: line 4, column 12"), std::string::npos) << r.out;
    EXPECT_NE(cli("run " + (dir_ / "missing.model").string()).status, 0);
    EXPECT_NE(cli("examples nope").status, 0);
    EXPECT_NE(cli("").status, 0);
    EXPECT_NE(cli("run " + model("ex1.model") + " --monitor-every 0").status, 0);
}
