#include "dpcd/patches.h"

#include <gtest/gtest.h>

#include "dpcd/geometry.h"
#include "test_util.h"

namespace dpcd {
namespace {

using testing::make_frame;
using testing::random_points;

TEST(BuildPatches, SinglePatchCoversEverything) {
  const Frame f = make_frame(random_points(20, 2));
  const PatchSet set = build_patches(f, 1, 19, 3);
  ASSERT_EQ(set.patch_count(), 1);
  auto members = set.patches[0].member_indices;
  EXPECT_EQ(members.front(), set.patches[0].center_index);
  std::sort(members.begin(), members.end());
  for (Index i = 0; i < 20; ++i) EXPECT_EQ(members[i], i);
}

TEST(BuildPatches, DefaultPatchCount) {
  EXPECT_EQ(patch_count_for(2000, 0.5), 1000);
  EXPECT_EQ(patch_count_for(7, 0.5), 4);
  EXPECT_EQ(patch_count_for(1, 0.1), 1);
  EXPECT_EQ(patch_count_for(10, 3.0), 10);
}

TEST(BuildPatches, MembersMatchBruteForceKnn) {
  const Points p = random_points(300, 4);
  const Frame f = make_frame(p);
  const PatchSet set = build_patches(f, 60, 12, 5);
  EXPECT_EQ(set.patch_count(), 60);
  EXPECT_EQ(set.patch_size(), 13);
  EXPECT_EQ(set.row_count(), 60 * 13);
  const auto centers = farthest_point_sampling(f, 60, 5);
  for (Index l = 0; l < 60; ++l) {
    const Patch& patch = set.patches[l];
    EXPECT_EQ(patch.center_index, centers[l]);
    std::vector<Index> expect{patch.center_index};
    for (Index j : testing::brute_knn(p, p.row(patch.center_index).transpose(), 12,
                                      patch.center_index)) {
      expect.push_back(j);
    }
    EXPECT_EQ(patch.member_indices, expect);
    for (Index r = 0; r < 13; ++r) {
      EXPECT_EQ(set.point_of_row(set.row(l, r)), patch.member_indices[r]);
    }
  }
}

TEST(BuildPatches, Errors) {
  const Frame f = make_frame(random_points(10, 1));
  EXPECT_THROW(build_patches(f, 2, 10, 1), PreconditionError);
  EXPECT_THROW(build_patches(f, 11, 3, 1), PreconditionError);
  EXPECT_THROW(build_patches(f, 0, 3, 1), PreconditionError);
}

TEST(PatchSet, StackedRelativeMatchesPerPatch) {
  const Points p = random_points(80, 6);
  const PatchSet set = build_patches(make_frame(p), 10, 7, 2);
  const Eigen::MatrixXd stacked = set.stacked_relative(p);
  for (Index l = 0; l < 10; ++l) {
    EXPECT_EQ(stacked.middleRows(set.row(l, 0), 8), relative_coords(set.patches[l], p));
  }
  const Points frozen = Points::Zero(10, 3);
  for (Index row = 0; row < set.row_count(); ++row) {
    EXPECT_EQ(set.stacked_relative(p, frozen).row(row),
              Eigen::RowVector3d(p.row(set.point_of_row(row))));
  }
}

TEST(RelativeCoords, FirstRowIsZero) {
  const Points p = random_points(50, 7);
  const PatchSet set = build_patches(make_frame(p), 5, 6, 1);
  for (const Patch& patch : set.patches) {
    EXPECT_EQ(relative_coords(patch, p).row(0), Eigen::RowVector3d::Zero());
  }
}

TEST(RelativeCoords, TranslationInvariant) {
  const Points p = random_points(50, 7);
  const Points q = p.rowwise() + Eigen::RowVector3d(3.0, -2.0, 0.5);
  const PatchSet set = build_patches(make_frame(p), 5, 6, 1);
  for (const Patch& patch : set.patches) {
    EXPECT_LE((relative_coords(patch, p) - relative_coords(patch, q)).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(RelativeCoords, TwoPointExample) {
  Points p(2, 3);
  p << 1, 1, 1, 2, 1, 1;
  const Patch patch{0, {0, 1}};
  Eigen::MatrixXd expect(2, 3);
  expect << 0, 0, 0, 1, 0, 0;
  EXPECT_EQ(relative_coords(patch, p), expect);
}

TEST(PatchEpsilon, TwoPoints) {
  Points p(2, 3);
  p << 0, 0, 0, 1, 0, 0;
  EXPECT_DOUBLE_EQ(patch_epsilon(Patch{0, {0, 1}}, p, 5.0), 5.0);
}

TEST(PatchEpsilon, RegularGrid) {
  Points p(9, 3);
  const double h = 0.1;
  for (Index i = 0; i < 9; ++i) p.row(i) << h * static_cast<double>(i % 3), h * static_cast<double>(i / 3), 0.0;
  Patch patch{4, {4, 0, 1, 2, 3, 5, 6, 7, 8}};
  EXPECT_NEAR(patch_epsilon(patch, p, 5.0), 5.0 * h, 1e-15);
}

TEST(PatchEpsilon, MatchesBruteForce) {
  const Points p = random_points(100, 8);
  const PatchSet set = build_patches(make_frame(p), 4, 20, 3);
  for (const Patch& patch : set.patches) {
    Points sub(patch.size(), 3);
    for (Index r = 0; r < patch.size(); ++r) sub.row(r) = p.row(patch.member_indices[r]);
    EXPECT_NEAR(patch_epsilon(patch, p, 5.0), 5.0 * testing::brute_mean_nn(sub), 1e-12);
  }
}

TEST(PatchEpsilon, NeedsTwoMembers) {
  const Points p = random_points(3, 1);
  EXPECT_THROW(patch_epsilon(Patch{0, {0}}, p, 5.0), PreconditionError);
}

}  // namespace
}  // namespace dpcd
