#include <cmath>
#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "gsrecon/error.hpp"
#include "gsrecon/io.hpp"
#include "test_support.hpp"

namespace gsr {
namespace {

using test::Rng;

TEST(Png, QuantizedImagesRoundTripExactly) {
  Rng rng(1);
  test::TempDir dir("png");
  for (int channels : {1, 3, 4}) {
    const Image img = quantize_8bit(test::random_image(rng, 13, 7, channels));
    write_png(dir / "a.png", img);
    const Image back = read_png(dir / "a.png");
    ASSERT_TRUE(back.same_shape(img)) << channels;
    for (std::size_t k = 0; k < img.data.size(); ++k) EXPECT_NEAR(back.data[k], img.data[k], 1e-12);
  }
}

TEST(Png, ClampsAndRounds) {
  test::TempDir dir("png");
  Image img(3, 1, 1);
  img.data = {-0.5, 1.7, 100.4 / 255.0};
  write_png(dir / "c.png", img);
  const Image back = read_png(dir / "c.png");
  EXPECT_DOUBLE_EQ(back.data[0], 0.0);
  EXPECT_DOUBLE_EQ(back.data[1], 1.0);
  EXPECT_DOUBLE_EQ(back.data[2], 100.0 / 255.0);
}

TEST(Png, Errors) {
  test::TempDir dir("png");
  EXPECT_THROW(write_png(dir / "x.png", Image(2, 2, 2)), DataError);
  EXPECT_THROW(read_png(dir / "missing.png"), DataError);
  std::ofstream(dir / "bad.png") << "not a png";
  EXPECT_THROW(read_png(dir / "bad.png"), DataError);
}

TEST(Pfm, RoundTripIsExactForFloats) {
  Rng rng(2);
  test::TempDir dir("pfm");
  Grid<double> g(9, 5);
  for (auto& v : g.values()) v = static_cast<float>(test::uniform(rng, -10.0, 10.0));
  g(3, 0) = 0.0;
  write_pfm(dir / "d.pfm", g);
  EXPECT_EQ(read_pfm(dir / "d.pfm"), g);
}

TEST(Pfm, RowsAreStoredBottomUp) {
  test::TempDir dir("pfm");
  Grid<double> g(1, 2);
  g(0, 0) = 1.0;  // top row
  g(0, 1) = 2.0;
  write_pfm(dir / "r.pfm", g);
  const auto bytes = test::read_bytes(dir / "r.pfm");
  ASSERT_GE(bytes.size(), 8u);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + bytes.size() - 8, sizeof first);
  EXPECT_EQ(first, 2.0f);
}

TEST(Pfm, RejectsColorAndBigEndian) {
  test::TempDir dir("pfm");
  std::ofstream(dir / "c.pfm", std::ios::binary) << "PF\n1 1\n-1.0\n";
  EXPECT_THROW(read_pfm(dir / "c.pfm"), DataError);
  std::ofstream(dir / "b.pfm", std::ios::binary) << "Pf\n1 1\n1.0\n\0\0\0\0";
  EXPECT_THROW(read_pfm(dir / "b.pfm"), DataError);
  std::ofstream(dir / "t.pfm", std::ios::binary) << "Pf\n4 4\n-1.0\n";
  EXPECT_THROW(read_pfm(dir / "t.pfm"), DataError);
}

TEST(CameraJson, RoundTripWithMissingPose) {
  Rng rng(3);
  test::TempDir dir("cam");
  CameraRig rig;
  rig.intrinsics = {28.5, 32, 24};
  rig.poses = {SE3Pose::identity(), std::nullopt, test::random_pose(rng)};
  write_camera_json(dir / "c.json", rig);
  const CameraRig back = read_camera_json(dir / "c.json");
  EXPECT_DOUBLE_EQ(back.intrinsics.f, 28.5);
  EXPECT_EQ(back.intrinsics.width, 32);
  EXPECT_EQ(back.intrinsics.height, 24);
  ASSERT_EQ(back.poses.size(), 3u);
  EXPECT_FALSE(back.poses[1].has_value());
  EXPECT_EQ(back.poses[2]->matrix(), rig.poses[2]->matrix());
  EXPECT_THROW(complete_poses(back), DataError);
  rig.poses.erase(rig.poses.begin() + 1);
  EXPECT_EQ(complete_poses(rig).size(), 2u);
}

TEST(CameraJson, RejectsMalformed) {
  test::TempDir dir("cam");
  std::ofstream(dir / "a.json") << R"({"f": 1, "width": 4, "height": 4, "poses": [[1, 2, 3]]})";
  EXPECT_THROW(read_camera_json(dir / "a.json"), DataError);
  std::ofstream(dir / "b.json") << R"({"f": -1, "width": 4, "height": 4, "poses": []})";
  EXPECT_THROW(read_camera_json(dir / "b.json"), DataError);
  std::ofstream(dir / "c.json") << "{";
  EXPECT_THROW(read_camera_json(dir / "c.json"), DataError);
}

}  // namespace
}  // namespace gsr
