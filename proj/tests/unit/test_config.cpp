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

#include <fstream>

#include "support.hpp"
#include "tinyreid/config.hpp"
#include "tinyreid/error.hpp"

using namespace tinyreid;

TEST(Config, DefaultsAndAssignedKeys) {
  const RunConfig c = parse_config("");
  EXPECT_EQ(c.alpha, 0.35);
  EXPECT_EQ(c.n_blocks, 7);
  EXPECT_EQ(c.embed_dim, 128);
  EXPECT_EQ(c.top_k, 5);
  EXPECT_TRUE(c.assigned.empty());
}

TEST(Config, ParsesKeysCommentsAndWhitespace) {
  const RunConfig c = parse_config(
      "# model\n"
      "alpha = 0.5\n"
      "n_blocks=10   # trailing\n"
      "\n"
      "  seed = 42\n"
      "lr=0.001\n");
  EXPECT_EQ(c.alpha, 0.5);
  EXPECT_EQ(c.n_blocks, 10);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.lr, 0.001);
  EXPECT_TRUE(c.has("alpha"));
  EXPECT_TRUE(c.has("seed"));
  EXPECT_FALSE(c.has("margin"));
  EXPECT_EQ(c.margin, 0.2);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("colour=blue\n"), InvalidArgument);
  EXPECT_THROW(parse_config("alpha\n"), InvalidArgument);
  EXPECT_THROW(parse_config("n_blocks=seven\n"), InvalidArgument);
  EXPECT_THROW(parse_config("embed_dim=0\n"), InvalidArgument);
  EXPECT_THROW(parse_config("top_k=-3\n"), InvalidArgument);
  EXPECT_THROW(parse_config("ratio=1.5\n"), InvalidArgument);
  EXPECT_THROW(parse_config("alpha=0.35x\n"), InvalidArgument);
  RunConfig c;
  EXPECT_THROW(c.set("epochs", "-1"), InvalidArgument);
  c.set("epochs", "0");
  EXPECT_EQ(c.epochs, 0);
}

TEST(Config, EveryKeyIsSettable) {
  RunConfig c;
  for (const std::string& k : config_keys()) {
    const std::string v = k == "ratio" ? "0.5" : "3";
    c.set(k, v);
    EXPECT_TRUE(c.has(k)) << k;
  }
  EXPECT_EQ(c.assigned, config_keys());
}

TEST(Config, LoadsFromFile) {
  testing_support::TempDir dir("cfg");
  const auto path = dir / "run.cfg";
  std::ofstream(path) << "margin=0.3\nepochs=7\n";
  const RunConfig c = load_config(path.string());
  EXPECT_EQ(c.margin, 0.3);
  EXPECT_EQ(c.epochs, 7);
  EXPECT_THROW(load_config((dir / "missing.cfg").string()), DataError);
}
