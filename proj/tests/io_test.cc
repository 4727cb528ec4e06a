#include "dpcd/io.h"

#include <sstream>

#include <gtest/gtest.h>

#include "dpcd/geometry.h"
#include "test_util.h"

namespace dpcd {
namespace {

Frame parse_ply(const std::string& text) {
  std::istringstream in(text);
  return read_ply(in, "test.ply");
}

Frame parse_xyz(const std::string& text) {
  std::istringstream in(text);
  return read_xyz(in, "test.xyz");
}

std::size_t parse_error_line(const std::string& text, bool ply) {
  try {
    ply ? parse_ply(text) : parse_xyz(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

TEST(ReadPly, SingleVertex) {
  const Frame f = parse_ply(
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n"
      "property float y\nproperty float z\nend_header\n0 0 0\n");
  ASSERT_EQ(f.size(), 1);
  EXPECT_EQ(f.position(0), Vec3::Zero());
  EXPECT_FALSE(f.has_normals());
}

TEST(ReadPly, SkipsExtraPropertiesAndElements) {
  const Frame f = parse_ply(
      "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\n"
      "property double x\nproperty uchar red\nproperty double y\nproperty double z\n"
      "property double nx\nproperty double ny\nproperty double nz\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
      "1 255 2 3 0 0 2\n4 0 5 6 1 0 0\n3 0 1 1\n");
  ASSERT_EQ(f.size(), 2);
  EXPECT_EQ(f.position(0), Vec3(1, 2, 3));
  EXPECT_EQ(f.position(1), Vec3(4, 5, 6));
  ASSERT_TRUE(f.has_normals());
  EXPECT_EQ(f.normal(0), Vec3(0, 0, 1));
  EXPECT_EQ(f.normal(1), Vec3(1, 0, 0));
}

TEST(ReadPly, ErrorsCarryLineNumbers) {
  const std::string head =
      "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\n"
      "property float y\nproperty float z\nend_header\n";
  EXPECT_EQ(parse_error_line(head + "0 0 0\n1 x 0\n", true), 9u);
  EXPECT_EQ(parse_error_line(head + "0 0 0\n1 0\n", true), 9u);
  EXPECT_EQ(parse_error_line("ply\nformat binary_little_endian 1.0\n", true), 2u);
  EXPECT_EQ(parse_error_line("plyx\n", true), 1u);
  EXPECT_EQ(parse_error_line("ply\nformat ascii 1.0\nelement vertex\n", true), 3u);
  EXPECT_GT(parse_error_line(head + "0 0 0\n", true), 0u);
}

TEST(ReadXyz, SixColumns) {
  const Frame f = parse_xyz("# comment\n\n0 0 0 0 0 1\n1 2 3 0 2 0\n");
  ASSERT_EQ(f.size(), 2);
  EXPECT_EQ(f.normal(0), Vec3(0, 0, 1));
  EXPECT_EQ(f.normal(1), Vec3(0, 1, 0));
  EXPECT_EQ(f.position(1), Vec3(1, 2, 3));
}

TEST(ReadXyz, Errors) {
  EXPECT_EQ(parse_error_line("0 0 0\n1 1\n", false), 2u);
  EXPECT_EQ(parse_error_line("0 0 0\n1 1 1 0 0 1\n", false), 2u);
  EXPECT_EQ(parse_error_line("0 0 q\n", false), 1u);
  EXPECT_THROW(parse_xyz("# nothing\n"), ParseError);
}

TEST(WritePly, RoundTrip) {
  Frame f;
  f.positions = testing::random_points(200, 3, 50.0);
  f = estimate_normals(f, 8);
  std::stringstream ss;
  write_ply(f, ss);
  const std::string text = ss.str();
  EXPECT_NE(text.find("element vertex 200\n"), std::string::npos);
  const Frame g = read_ply(ss);
  EXPECT_EQ(g.positions, f.positions);
  EXPECT_LE((*g.normals - *f.normals).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(WritePly, PositionsOnlyTextIsStable) {
  const Frame f = testing::make_frame(testing::random_points(50, 4, 3.0));
  std::stringstream ss;
  write_ply(f, ss);
  const std::string text = ss.str();
  std::stringstream again;
  write_ply(read_ply(ss), again);
  EXPECT_EQ(again.str(), text);
}

TEST(WritePly, EmptyFrameThrows) {
  std::stringstream ss;
  EXPECT_THROW(write_ply(Frame{}, ss), PreconditionError);
}

TEST(Config, ParseOverridesAndRoundTrip) {
  std::istringstream in(
      "# settings\nK = 12\nM = 300\nlambda1 = 0.25 # trailing\nM_prime = 0.8M\nseed = 42\n");
  const DenoiseConfig c = parse_config(in);
  EXPECT_EQ(c.K, 12);
  EXPECT_FALSE(c.M.relative);
  EXPECT_EQ(c.M.value, 300.0);
  EXPECT_EQ(c.lambda1, 0.25);
  EXPECT_TRUE(c.M_prime.relative);
  EXPECT_EQ(c.M_prime.value, 0.8);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.K_s, DenoiseConfig{}.K_s);

  std::stringstream out;
  write_config(c, out);
  const DenoiseConfig d = parse_config(out);
  std::stringstream out2;
  write_config(d, out2);
  EXPECT_EQ(out.str(), out2.str());
}

TEST(Config, Errors) {
  std::istringstream unknown("K = 3\nbogus = 1\n");
  try {
    parse_config(unknown);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad_int("K = 2.5\n");
  EXPECT_THROW(parse_config(bad_int), ParseError);
  std::istringstream no_eq("K 3\n");
  EXPECT_THROW(parse_config(no_eq), ParseError);
  DenoiseConfig c;
  EXPECT_THROW(apply_config_value(c, "alpha", "x"), PreconditionError);
}

}  // namespace
}  // namespace dpcd
