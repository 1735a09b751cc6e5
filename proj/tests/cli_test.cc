// Copyright 2026 The patchshade Authors. All Rights Reserved.
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
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#ifndef PATCHSHADE_CLI
#error "PATCHSHADE_CLI must name the command-line binary"
#endif

namespace {

struct Outcome {
  int status = -1;
  std::string out;
};

Outcome RunCli(const std::string& args) {
  const std::string command = std::string(PATCHSHADE_CLI) + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return o;
  std::array<char, 4096> buf;
  size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) o.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  o.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return o;
}

TEST(CliTest, ClassifiesGeneralizedCylinder) {
  const Outcome o = RunCli("classify --k1 1 --k2 0 --f 1");
  EXPECT_EQ(o.status, 0);
  EXPECT_EQ(o.out.rfind("GeneralizedCylinder", 0), 0u) << o.out;
}

TEST(CliTest, ClassifiesCurvatureCritical) {
  const Outcome o = RunCli("classify --k1 1 --k2 1 --json");
  EXPECT_EQ(o.status, 0);
  EXPECT_NE(o.out.find("\"tag\": \"CurvatureCritical\""), std::string::npos) << o.out;
}

TEST(CliTest, UniformSphereDensityAtTheOrigin) {
  const Outcome o = RunCli("density --sigma 0 --k1 1 --k2 1 --gx 0 --gy 0 --dist uniform-sphere");
  EXPECT_EQ(o.status, 0);
  EXPECT_NE(o.out.find("0.159155"), std::string::npos) << o.out;
}

TEST(CliTest, BadArgumentsExitWithTwo) {
  EXPECT_EQ(RunCli("density --no-such-flag").status, 2);
  EXPECT_EQ(RunCli("").status, 2);
  EXPECT_EQ(RunCli("density --dist nowhere").status, 2);
  EXPECT_EQ(RunCli("density --k1 1 --k2 0").status, 2);  // rank-deficient Dn
}

TEST(CliTest, RenderWritesOneImagePerShapeAndLight) {
  const std::string dir = ::testing::TempDir() + "/cli_render";
  std::filesystem::remove_all(dir);
  const Outcome o = RunCli("--out " + dir + " render");
  EXPECT_EQ(o.status, 0);
  int pngs = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    pngs += name.rfind("shape", 0) == 0 && entry.path().extension() == ".png";
  }
  EXPECT_EQ(pngs, 21);
  EXPECT_TRUE(std::filesystem::exists(dir + "/shape0_light0.pgm"));
  EXPECT_TRUE(std::filesystem::exists(dir + "/shapes.csv"));
}

TEST(CliTest, PrintedDefaultsRoundTripThroughConfig) {
  const std::string path = ::testing::TempDir() + "/cli_defaults.ini";
  const Outcome printed = RunCli("config --print-defaults");
  ASSERT_EQ(printed.status, 0);
  FILE* f = fopen(path.c_str(), "w");
  ASSERT_NE(f, nullptr);
  fputs(printed.out.c_str(), f);
  fclose(f);
  const Outcome again = RunCli("--config " + path + " config");
  EXPECT_EQ(again.status, 0);
  EXPECT_EQ(again.out, printed.out);
}

TEST(CliTest, SmokeExperimentWritesReports) {
  const std::string dir = ::testing::TempDir() + "/cli_smoke";
  const std::string ini = ::testing::TempDir() + "/cli_smoke.ini";
  std::filesystem::remove_all(dir);
  ASSERT_EQ(std::system((std::string(PATCHSHADE_CLI) + " config --smoke > " + ini).c_str()), 0);
  const Outcome o = RunCli("--config " + ini + " --out " + dir + " --json experiment");
  EXPECT_EQ(o.status, 0);
  EXPECT_NE(o.out.find("\"failures\": 0"), std::string::npos) << o.out;
  for (const char* f : {"long.csv", "summary.csv", "shapes.csv", "config.ini", "errors_shape0_light1.png"}) {
    EXPECT_TRUE(std::filesystem::exists(dir + "/" + f)) << f;
  }
}

TEST(CliTest, ReconstructWritesTraceAndMaps) {
  const std::string dir = ::testing::TempDir() + "/cli_recon";
  const std::string ini = ::testing::TempDir() + "/cli_recon.ini";
  std::filesystem::remove_all(dir);
  ASSERT_EQ(std::system((std::string(PATCHSHADE_CLI) + " config --smoke > " + ini).c_str()), 0);
  const Outcome o = RunCli("--config " + ini + " --out " + dir + " reconstruct --light 1 --perturb cw --profile gradient");
  EXPECT_EQ(o.status, 0);
  EXPECT_NE(o.out.find("angular error"), std::string::npos) << o.out;
  for (const char* f : {"trace.csv", "normals.png", "depth.png"}) {
    EXPECT_TRUE(std::filesystem::exists(dir + "/" + f)) << f;
  }
  EXPECT_EQ(RunCli("--config " + ini + " reconstruct --perturb sideways").status, 2);
}

}  // namespace
