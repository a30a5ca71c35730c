#pragma once
/**
 * @file
 * @brief End-to-end arrangement pipeline: symbolic relations from the oracle,
 *        recommended distances, geometric grounding, and plan optimization.
 */

#include <llmgrop/grounding.hpp>
#include <llmgrop/oracle.hpp>
#include <llmgrop/random.hpp>
#include <llmgrop/tamp.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace llmgrop
{
    struct PipelineConfig
    {
        OracleConfig oracle;
        SamplerParams sampler;
        PlannerParams planner;
        double resolution = kDefaultResolution;
    };

    struct GroundedArrangement
    {
        GenerationResult generation;
        std::map<Relation, DistanceAnswer> distances;
        NominalLayout nominal;
        std::vector<Configuration> candidates;

        const RelationSet &relations () const noexcept { return generation.relations; }
    };

    struct PipelineResult
    {
        GroundedArrangement arrangement;
        TaskMotionPlan plan;
    };

    /// Symbolic and geometric stages; failures are reported as StageError.
    inline GroundedArrangement ground_arrangement (const Scene &scene, LanguageModel &model, const PipelineConfig &cfg,
                                                   std::uint64_t seed)
    {
        GroundedArrangement out;
        const std::vector<std::string> names = scene.object_names ();
        try
        {
            out.generation = generate_consistent_relations (names, model, cfg.oracle);
        }
        catch (const Error &e)
        {
            throw StageError ("symbolic", e.what ());
        }
        try
        {
            out.distances = query_distances (out.relations (), model, cfg.oracle);
        }
        catch (const Error &e)
        {
            throw StageError ("distances", e.what ());
        }
        try
        {
            out.nominal = nominal_positions (out.relations (), midpoints (out.distances), select_anchor (out.relations ()));
            out.candidates = generate_candidates (out.nominal, out.relations (), scene.target (), scene.objects, cfg.sampler,
                                                  derive_seed (seed, "grounding"));
        }
        catch (const Error &e)
        {
            throw StageError ("grounding", e.what ());
        }
        return out;
    }

    /// Full pipeline on a prepared planning context (whose scene the arrangement is for).
    inline PipelineResult run_pipeline (PlanningContext &ctx, LanguageModel &model, const PipelineConfig &cfg, std::uint64_t seed)
    {
        PipelineResult out;
        out.arrangement = ground_arrangement (ctx.scene (), model, cfg, seed);
        try
        {
            out.plan = optimize (out.arrangement.candidates, ctx);
        }
        catch (const Error &e)
        {
            throw StageError ("planning", e.what ());
        }
        return out;
    }

    inline PipelineResult run_pipeline (const Scene &scene, LanguageModel &model, const PipelineConfig &cfg, std::uint64_t seed)
    {
        PlanningContext ctx = [&] {
            try
            {
                return PlanningContext (scene, rasterize (scene, cfg.resolution), cfg.planner);
            }
            catch (const Error &e)
            {
                throw StageError ("planning", e.what ());
            }
        }();
        return run_pipeline (ctx, model, cfg, seed);
    }
} // namespace llmgrop
