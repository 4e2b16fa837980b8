/*
 * Copyright 2026 The TinyReID Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "tinyreid/image_io.hpp"
#include "tinyreid/model_store.hpp"

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(TINYREID_CLI_PATH) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_line(const std::string& text, const std::string& line) {
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (l == line) return true;
  return false;
}

// Dataset with `ids` identities of `per` PPM images each.
void write_dataset(const std::filesystem::path& root, int ids, int per) {
  for (int id = 0; id < ids; ++id) {
    const auto dir = root / ("person" + std::to_string(id));
    std::filesystem::create_directories(dir);
    for (int s = 0; s < per; ++s) {
      const auto bytes = tinyreid::encode_ppm(testing_support::identity_rgb(id, s));
      std::ofstream(dir / ("img" + std::to_string(s) + ".ppm"), std::ios::binary)
          .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
  }
}

}  // namespace

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("no-such-command").code, 1);
  EXPECT_EQ(run("build --alpha").code, 1);
  EXPECT_EQ(run("build --alpha abc").code, 1);
  EXPECT_EQ(run("build --alpha 0.35 --n 7").code, 0);
  EXPECT_EQ(run("build --alpha 1.5").code, 1);
  EXPECT_EQ(run("embed --model /nonexistent/model.bin --image /nonexistent/x.ppm").code, 2);

  testing_support::TempDir dir("cli_codes");
  std::ofstream(dir / "junk.bin") << "not a model";
  EXPECT_EQ(run("embed --model " + (dir / "junk.bin").string() + " --image x.ppm").code, 2);
}

TEST(Cli, BuildAndPlanMemory) {
  const CliResult b = run("build");
  ASSERT_EQ(b.code, 0);
  EXPECT_TRUE(has_line(b.out, "params,214918"));
  EXPECT_TRUE(has_line(b.out, "layers,13"));

  const CliResult p = run("plan-memory --alpha 0.35 --n 7");
  ASSERT_EQ(p.code, 0);
  EXPECT_TRUE(has_line(p.out, "input,12288"));
  EXPECT_TRUE(has_line(p.out, "peak,61440"));
  EXPECT_NE(p.out.find("PASS sram"), std::string::npos);

  const CliResult tight = run("plan-memory --sram-budget 1000");
  ASSERT_EQ(tight.code, 0);
  EXPECT_NE(tight.out.find("FAIL sram"), std::string::npos);

  const CliResult spec = run("export-spec --dtype f32");
  ASSERT_EQ(spec.code, 0);
  EXPECT_NE(spec.out.find("Stem"), std::string::npos);
  EXPECT_EQ(run("export-spec --dtype int4").code, 1);
}

TEST(Cli, ConfigFilePrecedence) {
  testing_support::TempDir dir("cli_cfg");
  std::ofstream(dir / "a.cfg") << "alpha=0.5\nn_blocks=3\n";
  const std::string cfg = (dir / "a.cfg").string();
  const CliResult from_file = run("--config " + cfg + " build");
  ASSERT_EQ(from_file.code, 0);
  EXPECT_TRUE(has_line(from_file.out, "alpha,0.5"));
  EXPECT_TRUE(has_line(from_file.out, "n_blocks,3"));
  const CliResult flagged = run("--config " + cfg + " build --alpha 0.75");
  ASSERT_EQ(flagged.code, 0);
  EXPECT_TRUE(has_line(flagged.out, "alpha,0.75"));
  EXPECT_TRUE(has_line(flagged.out, "n_blocks,3"));

  std::ofstream(dir / "bad.cfg") << "volume=11\n";
  EXPECT_EQ(run("--config " + (dir / "bad.cfg").string() + " build").code, 1);
}

TEST(Cli, GenRandomModelIsDeterministic) {
  testing_support::TempDir dir("cli_gen");
  const std::string a = (dir / "a.bin").string(), b = (dir / "b.bin").string(), c = (dir / "c.bin").string();
  ASSERT_EQ(run("gen-random-model --seed 4 --out " + a).code, 0);
  ASSERT_EQ(run("--threads 1 gen-random-model --seed 4 --out " + b).code, 0);
  ASSERT_EQ(run("gen-random-model --seed 5 --out " + c).code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_NE(slurp(a), slurp(c));
  EXPECT_EQ(slurp(a).size(), 862172u);
}

TEST(Cli, SelfRetrievalPipeline) {
  testing_support::TempDir dir("cli_pipe");
  write_dataset(dir / "data", 4, 3);
  const std::string model = (dir / "m.bin").string();
  ASSERT_EQ(run("gen-random-model --seed 1 --n 3 --out " + model).code, 0);

  // Every image enrolled, and every image used again as a query.
  std::string manifest = "path,identity,split\n";
  for (int id = 0; id < 4; ++id)
    for (int s = 0; s < 3; ++s) {
      const std::string path = (dir / "data" / ("person" + std::to_string(id)) / ("img" + std::to_string(s) + ".ppm")).string();
      manifest += path + ",person" + std::to_string(id) + ",gallery\n";
      manifest += path + ",person" + std::to_string(id) + ",query\n";
    }
  std::ofstream(dir / "self.csv") << manifest;
  const std::string mf = (dir / "self.csv").string();
  const std::string gal = (dir / "g.bin").string();
  ASSERT_EQ(run("enroll --model " + model + " --manifest " + mf + " --out " + gal).code, 0);
  const CliResult ev = run("eval --model " + model + " --gallery " + gal + " --manifest " + mf);
  ASSERT_EQ(ev.code, 0);
  EXPECT_TRUE(has_line(ev.out, "mAP,1.0000")) << ev.out;
  EXPECT_TRUE(has_line(ev.out, "top1,1.0000")) << ev.out;

  const CliResult q = run("query --top-k 2 --model " + model + " --gallery " + gal + " --image " +
                    (dir / "data" / "person2" / "img1.ppm").string());
  ASSERT_EQ(q.code, 0);
  EXPECT_EQ(q.out.rfind("rank,identity,index,distance\n1,person2,", 0), 0u) << q.out;

  const CliResult e = run("embed --model " + model + " " + (dir / "data" / "person0" / "img0.ppm").string());
  ASSERT_EQ(e.code, 0);
  EXPECT_EQ(std::count(e.out.begin(), e.out.end(), ','), 128);

  EXPECT_EQ(run("eval --model " + model + " --gallery " + gal + " --manifest " + mf + " --split nope").code, 1);
}

TEST(Cli, SplitQuantizeFinetune) {
  testing_support::TempDir dir("cli_flow");
  write_dataset(dir / "data", 6, 4);
  const std::string mf = (dir / "m.csv").string();
  const CliResult s = run("split-dataset --root " + (dir / "data").string() + " --ratio 0.5 --seed 3 --out " + mf);
  ASSERT_EQ(s.code, 0) << s.out;
  EXPECT_TRUE(has_line(s.out, "train,12"));
  EXPECT_TRUE(has_line(s.out, "gallery,9"));
  EXPECT_TRUE(has_line(s.out, "query,3"));

  const std::string model = (dir / "f.bin").string(), q8 = (dir / "q.bin").string();
  ASSERT_EQ(run("gen-random-model --n 3 --out " + model).code, 0);
  ASSERT_EQ(run("quantize --model " + model + " --manifest " + mf + " --calib-count 5 --out " + q8).code, 0);
  EXPECT_NO_THROW(tinyreid::load_model_i8(q8));

  const std::string tuned = (dir / "t.bin").string(), loss = (dir / "loss.csv").string();
  ASSERT_EQ(run("finetune --model " + model + " --manifest " + mf + " --epochs 3 --out " + tuned +
                " --loss-csv " + loss).code, 0);
  EXPECT_EQ(slurp(loss).rfind("epoch,loss\n0,", 0), 0u);
  EXPECT_EQ(run("finetune --model " + model + " --manifest " + mf + " --shots 0 --out " + tuned).code, 1);
  EXPECT_EQ(run("split-dataset --root " + (dir / "data").string() + " --ratio 2 --out " + mf).code, 1);
}
