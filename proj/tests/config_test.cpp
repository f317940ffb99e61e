/*
 Copyright 2026 The koopdev Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include <gtest/gtest.h>

#include <sstream>

#include "koopdev/config.hpp"
#include "koopdev/io.hpp"

namespace koopdev {
namespace {

TEST(Config, DefaultsMatchDocumentedValues) {
  const RunConfig c;
  EXPECT_EQ(c.degree, 4);
  EXPECT_EQ(c.n_traj, 40);
  EXPECT_EQ(c.horizon, 20.0);
  EXPECT_EQ(c.step, 1e-3);
  EXPECT_EQ(c.resolution, 21);
  EXPECT_EQ(c.region(), Box::symmetric(2, 1.0));
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesKeyValueLines) {
  std::istringstream in(
      "# comment\n"
      "degree = 3\n"
      "  step=0.01   # trailing\n"
      "qbar = 2, 3\n"
      "\n"
      "plant = decay\n");
  const RunConfig c = parse_config(in);
  EXPECT_EQ(c.degree, 3);
  EXPECT_EQ(c.step, 0.01);
  EXPECT_EQ(c.qbar, (std::vector<double>{2.0, 3.0}));
  EXPECT_EQ(c.plant, "decay");
}

TEST(Config, RejectsBadInput) {
  std::istringstream unknown("colour = red\n");
  EXPECT_THROW(parse_config(unknown), InvalidArgument);
  std::istringstream no_eq("degree 4\n");
  EXPECT_THROW(parse_config(no_eq), ParseError);
  std::istringstream not_int("degree = 2.5\n");
  EXPECT_THROW(parse_config(not_int), ParseError);
  RunConfig c;
  c.step = -1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_THROW(load_config("/nonexistent/koopdev.cfg"), ParseError);
}

TEST(Config, TextRoundTrip) {
  RunConfig c;
  c.set("beta", "0.3");
  c.set("x0", "0.25,-0.5");
  c.set("seed", "12345678901");
  std::istringstream in(c.to_text());
  EXPECT_EQ(parse_config(in), c);
}

TEST(Config, DigestIgnoresOutputLocationAndJobs) {
  RunConfig a, b;
  b.out = "elsewhere";
  b.jobs = 7;
  EXPECT_EQ(a.digest(), b.digest());
  b.seed = 2;
  EXPECT_NE(a.digest(), b.digest());
  EXPECT_EQ(a.digest().size(), 16u);
}

TEST(Config, DerivedOptions) {
  RunConfig c;
  c.set("hold", "0.2");
  c.set("step", "0.005");
  c.set("slack_floor", "0.02");
  EXPECT_EQ(c.data_config().excitation.hold, 0.2);
  EXPECT_EQ(c.integration().step, 0.005);
  EXPECT_EQ(c.analysis().slack.floor, 0.02);
  const OcpWeights w = c.weights(build_monomial_basis(2, 2));
  EXPECT_EQ(w.lifted_Q().rows(), 5);
}

TEST(Numbers, FormatRoundTrips) {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 6.02214076e23, 1.0 / 3.0}) {
    EXPECT_EQ(parse_number(format_number(v)), v);
  }
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_THROW(parse_number("1.0x"), ParseError);
  EXPECT_THROW(parse_number(""), ParseError);
}

TEST(Strings, SplitTrimDigest) {
  EXPECT_EQ(split("a,b,,c", ','), (std::vector<std::string>{"a", "b", "", "c"}));
  EXPECT_EQ(trim("  x y \t"), "x y");
  // FNV-1a 64 of the empty string is the offset basis
  EXPECT_EQ(digest_hex(""), "cbf29ce484222325");
  EXPECT_EQ(digest_hex("a"), "af63dc4c8601ec8c");
}

}  // namespace
}  // namespace koopdev
