#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "leukex/error.hpp"
#include "leukex/slic.hpp"
#include "test_util.hpp"

namespace leukex {
namespace {

using namespace explain;

TEST(Slic, UniformImageGivesEqualQuadrants) {
    const auto img = testing::constant_tensor(kModelSide, kModelSide, 0.4f, 0.5f, 0.6f);
    SlicParams p;
    p.n_segments = 4;
    const auto seg = slic_segment(img, p);
    ASSERT_EQ(seg.n_segments, 4);
    EXPECT_TRUE(seg.check().empty()) << seg.check();
    const double ideal = kModelSide * kModelSide / 4.0;
    for (auto s : seg.sizes()) {
        EXPECT_NEAR(static_cast<double>(s), ideal, 0.05 * ideal);
    }
    // Grid layout: the four corners sit in four different segments.
    const std::set<int> corners{seg.at(0, 0), seg.at(0, 298), seg.at(298, 0), seg.at(298, 298)};
    EXPECT_EQ(corners.size(), 4u);
}

TEST(Slic, TwoToneBoundaryFollowsColourEdge) {
    const int edge = 140;
    const auto img = testing::two_tone(kModelSide, kModelSide, edge, {0.9f, 0.1f, 0.1f}, {0.1f, 0.2f, 0.9f});
    SlicParams p;
    p.n_segments = 2;
    const auto seg = slic_segment(img, p);
    ASSERT_EQ(seg.n_segments, 2);
    for (int r = 0; r < kModelSide; ++r) {
        int boundary = -1;
        for (int c = 1; c < kModelSide; ++c) {
            if (seg.at(r, c) != seg.at(r, c - 1)) {
                boundary = c;
                break;
            }
        }
        ASSERT_GE(boundary, 0) << "row " << r;
        EXPECT_LE(std::abs(boundary - edge), 2) << "row " << r;
    }
}

TEST(Slic, LabelsAreContiguousAndConnected) {
    const auto img = testing::noise_tensor(kModelSide, kModelSide, 7);
    for (int n : {2, 10, 50, 120}) {
        SlicParams p;
        p.n_segments = n;
        const auto seg = slic_segment(img, p);
        EXPECT_TRUE(seg.check().empty()) << n << ": " << seg.check();
        std::vector<int> comp;
        EXPECT_EQ(connected_components(seg, comp), seg.n_segments);
        EXPECT_EQ(*std::max_element(seg.seg_of.begin(), seg.seg_of.end()), seg.n_segments - 1);
    }
}

TEST(Slic, Deterministic) {
    const auto img = testing::noise_tensor(kModelSide, kModelSide, 8);
    const SlicParams p;
    EXPECT_EQ(slic_segment(img, p).seg_of, slic_segment(img, p).seg_of);
}

TEST(Slic, InvalidParameters) {
    const auto img = testing::noise_tensor(20, 20, 1);
    SlicParams p;
    p.n_segments = 1;
    EXPECT_THROW(slic_segment(img, p), ArgumentError);
    p = SlicParams{};
    p.compactness = 0.0;
    EXPECT_THROW(slic_segment(img, p), ArgumentError);
}

TEST(Lab, KnownColours) {
    ImageTensor t(1, 3);
    for (int c = 0; c < 3; ++c) {
        t.at(0, 0, c) = 1.0f;  // white
        t.at(0, 1, c) = 0.0f;  // black
    }
    t.at(0, 2, 0) = 1.0f;  // red
    const auto lab = rgb_to_lab(t);
    EXPECT_NEAR(lab[0], 100.0, 1e-3);
    EXPECT_NEAR(lab[1], 0.0, 1e-3);
    EXPECT_NEAR(lab[2], 0.0, 1e-3);
    EXPECT_NEAR(lab[3], 0.0, 1e-9);
    // sRGB red in CIELAB D65
    EXPECT_NEAR(lab[6], 53.24, 0.05);
    EXPECT_NEAR(lab[7], 80.09, 0.05);
    EXPECT_NEAR(lab[8], 67.20, 0.05);
}

TEST(SegmentMap, CheckFindsProblems) {
    SegmentMap s{1, 3, 2, {0, 1, 0}};
    EXPECT_FALSE(s.check().empty());  // segment 0 split in two
    s.seg_of = {0, 0, 0};
    EXPECT_FALSE(s.check().empty());  // segment 1 empty
    s.seg_of = {0, 1, 1};
    EXPECT_TRUE(s.check().empty());
}

}  // namespace
}  // namespace leukex
