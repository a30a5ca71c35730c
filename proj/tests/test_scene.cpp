#include <support/fixtures.hpp>
#include <support/oracles.hpp>

#include <llmgrop/scene.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace llmgrop;

namespace
{
    const char *kMinimal = R"({
  "tables": [{"id": "t", "shape": {"type": "rect", "w": 1.0, "h": 1.0}, "pose": [0, 0, 0]}],
  "objects": [],
  "robot": {"base_radius": 0.3, "reach_max": 1.0, "nav_speed": 0.5, "manip_time": 5.0}
})";

    Scene table_only (double w = 1.0, double h = 1.0)
    {
        Scene s = parse_scene (kMinimal);
        s.tables[0].shape = RectShape{w, h};
        s.workspace = Box{{-2.0, -2.0}, {2.0, 2.0}};
        return s;
    }
} // namespace

TEST (Scene, TaskFixturesLoad)
{
    const int expected[] = {3, 3, 3, 3, 3, 4, 4, 5};
    for (int t = 1; t <= 8; ++t)
    {
        const Scene s = fixtures::task (t);
        EXPECT_EQ (s.objects.size (), static_cast<std::size_t> (expected[t - 1])) << "task " << t;
        EXPECT_EQ (s.tables.size (), 1u);
        ASSERT_EQ (s.obstacles.size (), 1u);
        EXPECT_EQ (s.obstacles[0].kind, ObstacleKind::Dynamic);
        EXPECT_EQ (s.task_id, t);
    }
    const Scene t1 = fixtures::task (1);
    EXPECT_EQ (t1.object_names (), (std::vector<std::string>{"dinner plate", "dinner fork", "dinner knife"}));
}

TEST (Scene, EmptyObjectListIsValid)
{
    const Scene s = parse_scene (kMinimal);
    EXPECT_TRUE (s.objects.empty ());
    EXPECT_EQ (s.target ().id, "t");
}

TEST (Scene, DuplicateNameRejected)
{
    const std::string text = R"({
  "tables": [{"id": "t", "shape": {"type": "rect", "w": 1.0, "h": 1.0}, "pose": [0, 0, 0]}],
  "objects": [
    {"name": "mug", "shape": {"type": "circle", "radius": 0.04}, "source": [2, 0]},
    {"name": "mug", "shape": {"type": "circle", "radius": 0.04}, "source": [2, 1]}],
  "robot": {"base_radius": 0.3, "reach_max": 1.0, "nav_speed": 0.5, "manip_time": 5.0}
})";
    try
    {
        parse_scene (text);
        FAIL () << "expected DuplicateName";
    }
    catch (const DuplicateName &e)
    {
        EXPECT_NE (std::string (e.what ()).find ("mug"), std::string::npos);
    }
}

TEST (Scene, ParseErrorCarriesLine)
{
    const std::string text = "{\n  \"tables\": [\n    {\"id\": \"t\",, }\n  ]\n}";
    try
    {
        parse_scene (text);
        FAIL () << "expected SceneParseError";
    }
    catch (const SceneParseError &e)
    {
        EXPECT_EQ (e.line (), 3u);
    }
}

TEST (Scene, InvalidEntityNamed)
{
    std::string text = kMinimal;
    text.replace (text.find ("\"w\": 1.0"), 8, "\"w\": -1.0");
    try
    {
        parse_scene (text);
        FAIL () << "expected InvalidScene";
    }
    catch (const InvalidScene &e)
    {
        EXPECT_NE (std::string (e.what ()).find ("t"), std::string::npos);
    }
}

TEST (Scene, RobotReachMustExceedBase)
{
    std::string text = kMinimal;
    text.replace (text.find ("\"reach_max\": 1.0"), 16, "\"reach_max\": 0.2");
    EXPECT_THROW (parse_scene (text), InvalidScene);
}

TEST (Scene, JsonRoundTrip)
{
    const Scene a = fixtures::task (8);
    const Scene b = parse_scene (scene_to_json (a).dump ());
    EXPECT_EQ (scene_to_json (a), scene_to_json (b));
}

TEST (Overlap, Examples)
{
    const ObjectSpec sq{"a", RectShape{1.0, 1.0}, 0.1, false, {}};
    const ObjectSpec sq2{"b", RectShape{1.0, 1.0}, 0.1, false, {}};
    EXPECT_FALSE (footprints_overlap (sq, {0.0, 0.0}, sq2, {2.0, 0.0}));
    EXPECT_FALSE (footprints_overlap (sq, {0.0, 0.0}, sq2, {1.0, 0.0}));  // edge contact
    EXPECT_TRUE (footprints_overlap (sq, {0.0, 0.0}, sq2, {0.99, 0.5}));
    const ObjectSpec c1{"c", CircleShape{0.05}, 0.1, false, {}};
    const ObjectSpec c2{"d", CircleShape{0.05}, 0.1, false, {}};
    EXPECT_TRUE (footprints_overlap (c1, {0.0, 0.0}, c2, {0.06, 0.0}));
    EXPECT_FALSE (footprints_overlap (c1, {0.0, 0.0}, c2, {0.10, 0.0}));  // tangent
}

TEST (Overlap, RotatedRectangles)
{
    // A unit square rotated 45 degrees reaches sqrt(2)/2 along x.
    const PlacedShape a{RectShape{1.0, 1.0}, {0.0, 0.0, std::numbers::pi / 4}};
    EXPECT_TRUE (footprints_overlap (a, PlacedShape{RectShape{0.2, 0.2}, {0.75, 0.0, 0.0}}));
    EXPECT_FALSE (footprints_overlap (a, PlacedShape{RectShape{0.2, 0.2}, {0.82, 0.0, 0.0}}));
}

TEST (Overlap, SymmetricAndMatchesAxisAlignedOracle)
{
    std::mt19937_64 rng (11);
    std::uniform_real_distribution<double> pos (-0.3, 0.3), dim (0.02, 0.3);
    std::bernoulli_distribution coin;
    auto random_shape = [&] () -> Shape {
        if (coin (rng))
            return CircleShape{dim (rng) / 2};
        return RectShape{dim (rng), dim (rng)};
    };
    for (int i = 0; i < 5000; ++i)
    {
        const Shape a = random_shape (), b = random_shape ();
        const Vec2 pa{pos (rng), pos (rng)}, pb{pos (rng), pos (rng)};
        const bool ab = footprints_overlap (PlacedShape{a, {pa.x, pa.y, 0.0}}, PlacedShape{b, {pb.x, pb.y, 0.0}});
        const bool ba = footprints_overlap (PlacedShape{b, {pb.x, pb.y, 0.0}}, PlacedShape{a, {pa.x, pa.y, 0.0}});
        ASSERT_EQ (ab, ba);
        ASSERT_EQ (ab, oracle::overlap_aa (a, pa, b, pb));
    }
}

TEST (Rasterize, NoObstaclesAllFree)
{
    Scene s = table_only ();
    s.tables.clear ();
    s.target_table.clear ();
    const OccupancyGrid g = rasterize (s, 0.1);
    EXPECT_EQ (g.occupied_count (), 0u);
}

TEST (Rasterize, UnitTableGivesSixteenBySixteenBlock)
{
    const Scene s = table_only ();
    const OccupancyGrid g = rasterize (s, 0.1);
    ASSERT_EQ (g.width (), 40);
    EXPECT_EQ (g.occupied_count (), 256u);
    // Block spans [-0.8, 0.8] on both axes: cells 12..27.
    for (int y = 0; y < g.height (); ++y)
        for (int x = 0; x < g.width (); ++x)
        {
            const bool inside = x >= 12 && x <= 27 && y >= 12 && y <= 27;
            ASSERT_EQ (g.occupied ({x, y}), inside) << x << "," << y;
        }
}

TEST (Rasterize, MatchesPerCellOracleOnFixtures)
{
    for (int t = 1; t <= 8; ++t)
    {
        const Scene s = fixtures::task (t);
        for (bool dyn : {true, false})
        {
            const OccupancyGrid g = rasterize (s, 0.05, dyn);
            for (int y = 0; y < g.height (); ++y)
                for (int x = 0; x < g.width (); ++x)
                    ASSERT_EQ (g.occupied ({x, y}), oracle::cell_blocked (s, g.box_of ({x, y}), dyn))
                        << "task " << t << " cell " << x << "," << y;
        }
    }
}

TEST (Rasterize, ChairSouthBlocksOnlySouth)
{
    const Scene s = fixtures::task (1);  // chair south of the table
    const OccupancyGrid with = rasterize (s), without = rasterize (s, kDefaultResolution, false);
    EXPECT_GT (with.occupied_count (), without.occupied_count ());
    EXPECT_TRUE (with.occupied (with.cell_of ({0.0, -0.8})));
    EXPECT_FALSE (without.occupied (without.cell_of ({0.0, -0.8})));
    for (Vec2 p : {Vec2{0.0, 0.8}, Vec2{0.9, 0.0}, Vec2{-0.9, 0.0}})
        EXPECT_FALSE (with.occupied (with.cell_of (p)));
}

TEST (Rasterize, IdempotentAndDeterministic)
{
    const Scene s = fixtures::task (3);
    EXPECT_EQ (rasterize (s), rasterize (s));
}

TEST (Rasterize, CoarseResolutionGivesSingleCell)
{
    Scene s = table_only ();
    const OccupancyGrid g = rasterize (s, 10.0);
    EXPECT_EQ (g.width (), 1);
    EXPECT_EQ (g.height (), 1);
}
