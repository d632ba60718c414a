// Copyright 2026 The vnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

#include "vnn/model_io.hpp"

namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(VNN_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

bool contains(const std::string& s, const std::string& what) { return s.find(what) != std::string::npos; }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("vnn_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string fixture(const std::string& name) { return std::string(VNN_FIXTURE_DIR) + "/" + name; }

  std::string field_args() const {
    return "--model " + fixture("toy_field_model.json") + " --input " + fixture("toy_input.json");
  }

  CliRun prove(const std::string& extra = "") {
    return run("prove " + field_args() + " --transcript " + path("t.bin") + " --out " + path("r.json") + " " + extra);
  }
  CliRun verify(const std::string& transcript, const std::string& extra = "") {
    return run("verify " + field_args() + " --transcript " + transcript + " --result " + path("r.json") + " " + extra);
  }

  fs::path dir_;
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST_F(CliTest, ProveThenVerifyAccepts) {
  const auto p = prove();
  ASSERT_EQ(p.code, 0) << p.out;
  EXPECT_TRUE(contains(p.out, "transcript "));
  const auto v = verify(path("t.bin"));
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_TRUE(contains(v.out, "ACCEPT"));
  EXPECT_TRUE(contains(v.out, "verification "));
  EXPECT_TRUE(contains(v.out, "transcript " + std::to_string(fs::file_size(path("t.bin"))) + " bytes"));
}

TEST_F(CliTest, TruncatedTranscriptIsMalformed) {
  ASSERT_EQ(prove().code, 0);
  const std::string bytes = slurp(path("t.bin"));
  std::ofstream(path("cut.bin"), std::ios::binary) << bytes.substr(0, bytes.size() - 8);
  const auto v = verify(path("cut.bin"));
  EXPECT_EQ(v.code, 1);
  EXPECT_TRUE(contains(v.out, "REJECT: malformed transcript")) << v.out;
}

TEST_F(CliTest, AlteredOutputRejected) {
  ASSERT_EQ(prove().code, 0);
  auto r = vnn::io::read_json_file(path("r.json"));
  r["z_last"][0][0] = vnn::io::signed_to_json(vnn::io::parse_signed(r["z_last"][0][0]) + 1);
  vnn::io::write_text_file(path("r.json"), r.dump());
  const auto v = verify(path("t.bin"));
  EXPECT_EQ(v.code, 1);
  EXPECT_TRUE(contains(v.out, "REJECT"));
}

TEST_F(CliTest, FiatShamirRunsAreIdentical) {
  ASSERT_EQ(prove().code, 0);
  const std::string first = slurp(path("t.bin"));
  ASSERT_EQ(prove().code, 0);
  EXPECT_EQ(first, slurp(path("t.bin")));
}

TEST_F(CliTest, InteractiveModeReproducibleWithSeed) {
  ASSERT_EQ(prove("--mode interactive --seed 99").code, 0);
  EXPECT_EQ(verify(path("t.bin"), "--seed 99").code, 0);
  EXPECT_EQ(verify(path("t.bin"), "--seed 100").code, 1);
}

TEST_F(CliTest, BoundForWideNetwork) {
  const auto b = run("bound --shapes 1845,2000,2000,2000,183 --batch 2048 --prime m61");
  EXPECT_EQ(b.code, 0);
  EXPECT_TRUE(contains(b.out, "< 2^-30: yes")) << b.out;
  EXPECT_TRUE(contains(b.out, "epsilon = 49324032/2305843009213693951")) << b.out;
}

TEST_F(CliTest, QuantizeWritesFieldModel) {
  const auto q = run("quantize --model " + fixture("toy_float_model.json") + " --input " + fixture("toy_calibration.json") +
                     " --alpha 16 --beta 16 --out " + path("m.json"));
  EXPECT_EQ(q.code, 0) << q.out;
  EXPECT_EQ(slurp(path("m.json")), slurp(fixture("toy_field_model.json")));
}

TEST_F(CliTest, QuantizeSweepMarksOverflow) {
  const auto q = run("quantize --model " + fixture("toy_float_model.json") + " --input " + fixture("toy_calibration.json") +
                     " --alpha 4,64 --beta 4,64");
  EXPECT_EQ(q.code, 0);
  EXPECT_TRUE(contains(q.out, "*")) << q.out;
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("verify --model " + fixture("toy_field_model.json")).code, 2);
  EXPECT_EQ(run("prove --model /no/such/file.json --input x --transcript t --out o").code, 2);

  std::ofstream(path("garbage.json")) << "{ not json";
  EXPECT_EQ(run("infer --model " + path("garbage.json") + " --input " + fixture("toy_input.json")).code, 3);
  EXPECT_EQ(prove().code, 0);
  EXPECT_EQ(run("prove " + field_args() + " --transcript /no/such/dir/t.bin --out " + path("r.json")).code, 3);

  const auto o = run("quantize --model " + fixture("toy_float_model.json") + " --input " + fixture("toy_calibration.json") +
                     " --alpha 64 --beta 64 --out " + path("m.json"));
  EXPECT_EQ(o.code, 4);
  EXPECT_TRUE(contains(o.out, "overflow"));
}

TEST_F(CliTest, InferReportsPredictions) {
  const auto i = run("infer " + field_args() + " --out " + path("z.json"));
  EXPECT_EQ(i.code, 0) << i.out;
  const auto z = vnn::io::read_json_file(path("z.json"));
  EXPECT_EQ(z["argmax"].size(), 32u);
  EXPECT_EQ(z["z_last"].size(), 4u);
}

TEST_F(CliTest, Selftest) {
  const auto s = run("selftest --trials 5");
  EXPECT_EQ(s.code, 0) << s.out;
  EXPECT_FALSE(contains(s.out, "FAIL"));
}

}  // namespace
