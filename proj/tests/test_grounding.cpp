#include <support/fixtures.hpp>
#include <support/oracles.hpp>

#include <llmgrop/grounding.hpp>
#include <llmgrop/pipeline.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace llmgrop;

namespace
{
    ObjectSpec circle (std::string name, double r, bool base = false) { return {std::move (name), CircleShape{r}, 0.02, base, {}}; }
    ObjectSpec rect (std::string name, double w, double h) { return {std::move (name), RectShape{w, h}, 0.02, false, {}}; }

    Table table (double w, double h) { return {"t", RectShape{w, h}, {}}; }

    const RelationSet kPlateKnife ({{"plate", RelationKind::CenterOfTable, ""}, {"knife", RelationKind::RightOf, "plate"}});
} // namespace

TEST (Nominal, SingleOffsets)
{
    const NominalLayout n = nominal_positions (kPlateKnife, {{{"knife", RelationKind::RightOf, "plate"}, 6.0}}, "plate");
    EXPECT_NEAR (n.positions.at ("plate").position.x, 0.0, 1e-12);
    EXPECT_NEAR (n.positions.at ("knife").position.x, 0.06, 1e-12);
    EXPECT_NEAR (n.positions.at ("knife").position.y, 0.0, 1e-12);

    const RelationSet diag ({{"cup", RelationKind::AboveRight, "plate"}});
    const NominalLayout d = nominal_positions (diag, {{{"cup", RelationKind::AboveRight, "plate"}, 10.0}}, "plate");
    EXPECT_NEAR (d.positions.at ("cup").position.x, 0.0707, 1e-4);
    EXPECT_NEAR (d.positions.at ("cup").position.y, 0.0707, 1e-4);
}

TEST (Nominal, ReverseEdgesAndStacking)
{
    // Anchor is the subject of the only relation: propagation walks it backwards.
    const RelationSet rs ({{"fork", RelationKind::LeftOf, "plate"}, {"bread", RelationKind::OnTopOf, "plate"}});
    const NominalLayout n = nominal_positions (rs, {{{"fork", RelationKind::LeftOf, "plate"}, 20.0}}, "fork");
    EXPECT_NEAR (n.positions.at ("plate").position.x, 0.20, 1e-12);
    EXPECT_EQ (n.positions.at ("bread").position, n.positions.at ("plate").position);
    EXPECT_EQ (n.positions.at ("bread").stack_level, 1);
    EXPECT_EQ (n.positions.at ("plate").stack_level, 0);
}

TEST (Nominal, Errors)
{
    EXPECT_THROW (nominal_positions (RelationSet{}, {}, "x"), EmptyRelationSet);
    EXPECT_THROW (nominal_positions (kPlateKnife, {}, "plate"), MissingDistance);
    const RelationSet two ({{"a", RelationKind::LeftOf, "b"}, {"c", RelationKind::LeftOf, "d"}});
    EXPECT_THROW (nominal_positions (two, {{{"a", RelationKind::LeftOf, "b"}, 5.0}, {{"c", RelationKind::LeftOf, "d"}, 5.0}}, "a"),
                  Disconnected);
}

TEST (Anchor, MostConnectedCenterObject)
{
    EXPECT_EQ (select_anchor (kPlateKnife), "plate");
    const RelationSet rs ({{"fork", RelationKind::LeftOf, "plate"}, {"knife", RelationKind::RightOf, "plate"}});
    EXPECT_EQ (select_anchor (rs), "plate");
}

TEST (Sampler, TinyCovarianceReproducesNominal)
{
    const std::vector<ObjectSpec> objs{circle ("plate", 0.1), rect ("knife", 0.02, 0.2)};
    const NominalLayout n = nominal_positions (kPlateKnife, {{{"knife", RelationKind::RightOf, "plate"}, 18.0}}, "plate");
    SamplerParams p;
    p.covariance = {1e-14, 0.0, 1e-14};
    const auto c = generate_candidates (n, kPlateKnife, table (1.0, 0.8), objs, p, 11);
    ASSERT_EQ (c.size (), 10u);
    for (const auto &cfg : c)
        for (const auto &[name, pl] : cfg.placements)
            EXPECT_NEAR (distance (pl.position, n.positions.at (name).position), 0.0, 1e-5);
}

TEST (Sampler, TableTooSmallRejects)
{
    const std::vector<ObjectSpec> objs{circle ("plate", 0.1), rect ("knife", 0.02, 0.2)};
    const NominalLayout n = nominal_positions (kPlateKnife, {{{"knife", RelationKind::RightOf, "plate"}, 18.0}}, "plate");
    EXPECT_THROW (generate_candidates (n, kPlateKnife, table (0.10, 0.10), objs, SamplerParams{}, 1), NoValidConfiguration);
}

TEST (Sampler, EmpiricalMeanMatchesNominal)
{
    // One free object on a huge table: accepted draws are the raw Gaussian.
    const RelationSet rs ({{"cup", RelationKind::CenterOfTable, ""}});
    const std::vector<ObjectSpec> objs{circle ("cup", 0.04)};
    const NominalLayout n{"cup", {{"cup", {{0.0, 0.0}, 0}}}};
    SamplerParams p;
    p.band = 10.0;
    double sx = 0, sy = 0, sxx = 0;
    const int N = 10000;
    for (int k = 0; k < N; ++k)
    {
        const auto r = sample_configuration (n, rs, table (5, 5), objs, p, static_cast<std::uint64_t> (k));
        const Vec2 v = std::get<Configuration> (r).placements.at ("cup").position;
        sx += v.x, sy += v.y, sxx += v.x * v.x;
    }
    EXPECT_NEAR (sx / N, 0.0, 0.005);
    EXPECT_NEAR (sy / N, 0.0, 0.005);
    EXPECT_NEAR (std::sqrt (sxx / N), 0.02, 0.001);
}

TEST (Sampler, CorrelatedCovariance)
{
    const RelationSet rs ({{"cup", RelationKind::CenterOfTable, ""}});
    const std::vector<ObjectSpec> objs{circle ("cup", 0.01)};
    const NominalLayout n{"cup", {{"cup", {{0.0, 0.0}, 0}}}};
    SamplerParams p;
    p.band = 10.0;
    p.covariance = {0.0004, 0.0003, 0.0009};
    double sxy = 0, syy = 0;
    const int N = 20000;
    for (int k = 0; k < N; ++k)
    {
        const Vec2 v = std::get<Configuration> (sample_configuration (n, rs, table (5, 5), objs, p, static_cast<std::uint64_t> (k)))
                           .placements.at ("cup")
                           .position;
        sxy += v.x * v.y, syy += v.y * v.y;
    }
    EXPECT_NEAR (sxy / N, 0.0003, 0.00003);
    EXPECT_NEAR (syy / N, 0.0009, 0.00005);
    p.covariance = {0.0004, 0.001, 0.0004};
    EXPECT_THROW (sample_configuration (n, rs, table (5, 5), objs, p, 1), Error);
}

TEST (Sampler, IllegalStacking)
{
    const RelationSet rs ({{"plate", RelationKind::CenterOfTable, ""}, {"cup", RelationKind::OnTopOf, "plate"}});
    const std::vector<ObjectSpec> objs{circle ("plate", 0.1, false), circle ("cup", 0.04)};
    const NominalLayout n = nominal_positions (rs, {}, "plate");
    EXPECT_THROW (sample_configuration (n, rs, table (1, 1), objs, SamplerParams{}, 1), IllegalStacking);
}

TEST (Candidates, AllTasksValidAndDeterministic)
{
    PipelineConfig cfg;
    for (int id = 1; id <= 8; ++id)
    {
        const Scene s = fixtures::task (id);
        StaticBackend b1 = fixtures::static_backend (), b2 = fixtures::static_backend ();
        const GroundedArrangement g1 = ground_arrangement (s, b1, cfg, 42);
        const GroundedArrangement g2 = ground_arrangement (s, b2, cfg, 42);
        ASSERT_EQ (g1.candidates.size (), 10u) << "task " << id;
        ASSERT_EQ (g1.candidates.size (), g2.candidates.size ());
        const auto &tr = std::get<RectShape> (s.target ().shape);
        for (std::size_t k = 0; k < g1.candidates.size (); ++k)
        {
            const Configuration &c = g1.candidates[k];
            EXPECT_EQ (c.placements, g2.candidates[k].placements);
            EXPECT_EQ (c.placements.size (), s.objects.size ());
            EXPECT_EQ (oracle::validate (c, g1.relations ().relations (), tr.w, tr.h, s.objects), "") << "task " << id;
            EXPECT_TRUE (validate_configuration (c, g1.relations (), s.target (), s.objects).empty ());
            // Stacked objects sit exactly on their base.
            for (const auto &r : g1.relations ().relations ())
                if (r.kind == RelationKind::OnTopOf)
                {
                    EXPECT_EQ (c.placements.at (r.subject).position, c.placements.at (r.anchor).position);
                }
        }
    }
}

TEST (Candidates, ValidatorFindsPlantedProblems)
{
    const Scene s = fixtures::task (1);
    StaticBackend b = fixtures::static_backend ();
    const GroundedArrangement g = ground_arrangement (s, b, PipelineConfig{}, 3);
    Configuration c = g.candidates.front ();
    c.placements.at ("dinner fork").position = c.placements.at ("dinner plate").position;
    EXPECT_FALSE (validate_configuration (c, g.relations (), s.target (), s.objects).empty ());
    EXPECT_NE (oracle::validate (c, g.relations ().relations (), 1.0, 0.8, s.objects), "");
}

TEST (Candidates, JsonRoundTrip)
{
    const Scene s = fixtures::task (5);
    StaticBackend b = fixtures::static_backend ();
    const GroundedArrangement g = ground_arrangement (s, b, PipelineConfig{}, 9);
    const Configuration &c = g.candidates.front ();
    const Configuration back = configuration_from_json (configuration_to_json (c));
    EXPECT_EQ (back.placements, c.placements);
}
