#pragma once
/**
 * @file
 * @brief Stochastic kinematic execution of plans, the three baseline planners,
 *        layout scoring, and the benchmark harness.
 *
 * Execution model: each navigation leg fails with a probability that grows
 * near obstacles; a failed attempt costs the leg time plus a replanning delay
 * and is retried up to `retry_limit` times, after which the object is given up
 * (its planned time is still spent). A place fails with a probability linear
 * in the reach distance; the object then lands at the target with Gaussian
 * positional noise.
 */

#include <llmgrop/grounding.hpp>
#include <llmgrop/oracle.hpp>
#include <llmgrop/pipeline.hpp>
#include <llmgrop/random.hpp>
#include <llmgrop/tamp.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace llmgrop
{
    struct FailureModel
    {
        double nav_fail_base = 0.02;
        /// Multiplier on nav_fail_base when the goal is within `clearance` of an obstacle.
        double nav_fail_near_obstacle = 5.0;
        /// Gap (m) between the robot base edge and an obstacle footprint counted as "near".
        double clearance = 0.3;
        /// Place failure probability per meter of reach beyond the base radius.
        double manip_fail_slope = 0.5;
        double drop_sigma = 0.05;
        int retry_limit = 3;
        double replan_time = 2.0;
        std::uint64_t seed = 0;

        static FailureModel noiseless ()
        {
            FailureModel m;
            m.nav_fail_base = 0.0;
            m.manip_fail_slope = 0.0;
            return m;
        }
    };

    /// True iff the robot base at `goal` comes within the model's clearance of an obstacle (chairs, not tables).
    inline bool near_obstacle (const Pose2 &goal, const Scene &scene, const FailureModel &model)
    {
        for (const auto &o : scene.obstacles)
            if (distance_to_point (o.placed (), goal.position ()) - scene.robot.base_radius <= model.clearance)
                return true;
        return false;
    }

    inline double nav_failure_probability (const Pose2 &goal, const Scene &scene, const FailureModel &model)
    {
        const double mult = near_obstacle (goal, scene, model) ? model.nav_fail_near_obstacle : 1.0;
        return std::clamp (model.nav_fail_base * mult, 0.0, 1.0);
    }

    inline double manip_failure_probability (double reach, const RobotSpec &robot, const FailureModel &model)
    {
        if (reach > robot.reach_max)
            return 1.0;
        return std::clamp (model.manip_fail_slope * std::max (0.0, reach - robot.base_radius), 0.0, 1.0);
    }

    struct Outcome
    {
        std::map<std::string, bool> success_per_object;  // placed exactly as planned
        std::map<std::string, Vec2> final_placements;    // world frame, placed objects only
        std::map<std::string, Placement> final_layout;   // table frame
        double exec_time = 0.0;
        double semantic_score = 0.0;
        bool all_present = false;
        int nav_failures = 0;
        int manip_failures = 0;
    };

    /**
     * @brief Fraction of reference relations that hold in a table-frame layout.
     *        Relations naming a missing object count as violated; on-top-of also
     *        needs the subject on a higher stack level.
     */
    inline double semantic_score (const RelationSet &reference, const std::map<std::string, Placement> &layout,
                                  const std::vector<ObjectSpec> &objects, std::optional<double> band = std::nullopt)
    {
        if (reference.empty ())
            return 1.0;
        std::size_t ok = 0;
        for (const auto &r : reference.relations ())
        {
            const auto s = layout.find (r.subject);
            if (s == layout.end ())
                continue;
            Placement anchor{};
            if (r.kind != RelationKind::CenterOfTable)
            {
                const auto a = layout.find (r.anchor);
                if (a == layout.end ())
                    continue;
                anchor = a->second;
            }
            if (r.kind == RelationKind::OnTopOf && s->second.stack_level <= anchor.stack_level)
                continue;
            if (satisfied (r, s->second.position, anchor.position, relation_band (r, objects, band)))
                ++ok;
        }
        return static_cast<double> (ok) / static_cast<double> (reference.size ());
    }

    /// Simulate a plan. Deterministic given `model.seed`.
    inline Outcome execute (const TaskMotionPlan &plan, const Scene &scene, const FailureModel &model, const RelationSet &reference)
    {
        Rng rng = make_rng (model.seed);
        std::uniform_real_distribution<double> unit (0.0, 1.0);
        std::normal_distribution<double> noise (0.0, 1.0);
        const Table &table = scene.target ();
        Outcome out;

        auto traverse = [&] (const Leg &leg) {
            const double p = nav_failure_probability (leg.to, scene, model);
            int failures = 0;
            bool reached = true;
            while (unit (rng) < p)
            {
                ++failures;
                ++out.nav_failures;
                out.exec_time += leg.time + model.replan_time;
                if (failures > model.retry_limit)
                {
                    reached = false;
                    break;
                }
            }
            out.exec_time += leg.time;
            return reached;
        };

        for (const auto &step : plan.steps)
        {
            const bool picked = traverse (step.fetch_leg);
            out.exec_time += scene.robot.manip_time;
            const bool arrived = traverse (step.place_leg);
            out.exec_time += scene.robot.manip_time;
            if (!picked || !arrived)
            {
                out.success_per_object[step.object] = false;
                continue;
            }
            Vec2 world = step.target_world;
            bool exact = true;
            if (unit (rng) < manip_failure_probability (step.reach, scene.robot, model))
            {
                ++out.manip_failures;
                exact = false;
                world = world + model.drop_sigma * Vec2{noise (rng), noise (rng)};
            }
            out.success_per_object[step.object] = exact;
            out.final_placements[step.object] = world;
            out.final_layout[step.object] = {table.pose.to_local (world), step.target.stack_level};
        }
        out.all_present = true;
        for (const auto &o : scene.objects)
            if (!out.final_placements.count (o.name))
                out.all_present = false;
        out.semantic_score = semantic_score (reference, out.final_layout, scene.objects);
        return out;
    }

    // Baselines

    /**
     * @brief Uniformly random non-overlapping in-bounds placements, all on the
     *        table surface, in lexicographic order.
     * @throws NoValidConfiguration if some object cannot be placed.
     */
    inline Configuration random_configuration (const std::vector<ObjectSpec> &objects, const Table &table, std::uint64_t seed,
                                               int max_tries = 1000)
    {
        Rng rng = make_rng (seed);
        std::uniform_real_distribution<double> unit (0.0, 1.0);
        Configuration cfg;
        cfg.seed = seed;
        for (const auto &o : objects)
            cfg.order.push_back (o.name);
        std::sort (cfg.order.begin (), cfg.order.end ());
        for (const auto &name : cfg.order)
        {
            const ObjectSpec &spec = find_object (objects, name);
            bool placed = false;
            for (int t = 0; t < max_tries && !placed; ++t)
            {
                Vec2 p;
                if (const auto *r = std::get_if<RectShape> (&table.shape))
                    p = {(unit (rng) - 0.5) * r->w, (unit (rng) - 0.5) * r->h};
                else
                {
                    const double R = std::get<CircleShape> (table.shape).radius;
                    const double rad = R * std::sqrt (unit (rng)), ang = 2.0 * std::numbers::pi * unit (rng);
                    p = {rad * std::cos (ang), rad * std::sin (ang)};
                }
                if (!contained_in (table.shape, spec.footprint, p))
                    continue;
                bool clear = true;
                for (const auto &[other, pl] : cfg.placements)
                    if (footprints_overlap (spec, p, find_object (objects, other), pl.position))
                        clear = false;
                if (clear)
                {
                    cfg.placements[name] = {p, 0};
                    placed = true;
                }
            }
            if (!placed)
                throw NoValidConfiguration ("cannot place " + name + " randomly");
        }
        return cfg;
    }

    /// Chooser picking uniformly among reachable standing poses, ignoring feasibility.
    inline PoseChooser uniform_pose_chooser (std::uint64_t seed)
    {
        auto rng = std::make_shared<Rng> (make_rng (seed));
        return [rng] (const std::vector<PoseOption> &options) -> std::optional<std::size_t> {
            std::vector<std::size_t> ok;
            for (std::size_t i = 0; i < options.size (); ++i)
                if (std::isfinite (options[i].cost))
                    ok.push_back (i);
            if (ok.empty ())
                return std::nullopt;
            std::uniform_int_distribution<std::size_t> pick (0, ok.size () - 1);
            return ok[pick (*rng)];
        };
    }

    /// Task planning with random arrangement and random standing poses.
    inline TaskMotionPlan plan_tpra (PlanningContext &ctx, std::uint64_t seed)
    {
        const Scene &scene = ctx.scene ();
        const Configuration cfg = random_configuration (scene.objects, scene.target (), derive_seed (seed, "tpra-layout"));
        return plan_with_chooser (cfg, ctx, uniform_pose_chooser (derive_seed (seed, "tpra-poses")));
    }

    /// LLM arrangement and grounding, but standing poses drawn uniformly around the table.
    inline TaskMotionPlan plan_latp (PlanningContext &ctx, LanguageModel &model, const PipelineConfig &cfg, std::uint64_t seed)
    {
        const GroundedArrangement g = ground_arrangement (ctx.scene (), model, cfg, seed);
        return plan_with_chooser (g.candidates.front (), ctx, uniform_pose_chooser (derive_seed (seed, "latp-poses")));
    }

    /// Random arrangements (M of them) with full utility optimization of poses and candidates.
    inline TaskMotionPlan plan_grop_random (PlanningContext &ctx, std::uint64_t seed, int candidates)
    {
        const Scene &scene = ctx.scene ();
        std::vector<Configuration> cfgs;
        for (int k = 0; k < std::max (1, candidates); ++k)
            cfgs.push_back (random_configuration (scene.objects, scene.target (), derive_seed (seed, "grop-layout", {static_cast<std::uint64_t> (k)})));
        return optimize (cfgs, ctx);
    }

    // Benchmark

    enum class Method
    {
        LlmGrop,
        Latp,
        Tpra,
        GropRandom
    };

    inline constexpr std::array<Method, 4> kAllMethods = {Method::LlmGrop, Method::Latp, Method::Tpra, Method::GropRandom};

    inline std::string_view to_string (Method m)
    {
        switch (m)
        {
        case Method::LlmGrop: return "llm-grop";
        case Method::Latp: return "latp";
        case Method::Tpra: return "tpra";
        case Method::GropRandom: return "grop";
        }
        return "?";
    }

    inline std::optional<Method> method_from_string (std::string_view s)
    {
        for (Method m : kAllMethods)
            if (to_string (m) == s)
                return m;
        return std::nullopt;
    }

    using ModelFactory = std::function<std::unique_ptr<LanguageModel> ()>;

    /**
     * @brief Move the scene's first dynamic obstacle to the middle of one side of
     *        the target table (0 south, 1 east, 2 north, 3 west), `gap` meters off the edge.
     */
    inline Scene place_chair (Scene scene, int side, double gap = 0.05)
    {
        const Table &table = scene.target ();
        for (auto &o : scene.obstacles)
        {
            if (o.kind != ObstacleKind::Dynamic)
                continue;
            const Box ob = bounding_box ({o.footprint, {0.0, 0.0, 0.0}});
            const double cx = 0.5 * (ob.max.x - ob.min.x), cy = 0.5 * (ob.max.y - ob.min.y);
            double tx, ty;
            if (const auto *r = std::get_if<RectShape> (&table.shape))
                tx = 0.5 * r->w, ty = 0.5 * r->h;
            else
                tx = ty = std::get<CircleShape> (table.shape).radius;
            Vec2 local;
            switch (((side % 4) + 4) % 4)
            {
            case 0: local = {0.0, -(ty + gap + cy)}; break;
            case 1: local = {tx + gap + cx, 0.0}; break;
            case 2: local = {0.0, ty + gap + cy}; break;
            default: local = {-(tx + gap + cx), 0.0}; break;
            }
            const Vec2 w = table.pose.to_world (local);
            o.pose = {w.x, w.y, o.pose.theta};
            break;
        }
        return scene;
    }

    struct BenchmarkTask
    {
        int id = 0;
        Scene scene;
    };

    struct BenchmarkConfig
    {
        std::vector<Method> methods{kAllMethods.begin (), kAllMethods.end ()};
        int trials = 20;
        std::uint64_t seed = 0;
        FailureModel failure;
        PipelineConfig pipeline;
        /// Put the chair on a random side of the table each trial (shared by all methods).
        bool randomize_chair = true;
        ModelFactory oracle;
        /// Model whose arrangement defines the reference relations for scoring.
        ModelFactory reference;
    };

    struct TrialRow
    {
        int task = 0;
        std::string method;
        int trial = 0;
        std::uint64_t seed = 0;
        int chair_side = -1;
        bool planned = false;
        std::string error;
        double semantic_score = 0.0;
        bool all_present = false;
        double exec_time = 0.0;
        double plan_cost = 0.0;
        double plan_utility = 0.0;
        int nav_failures = 0;
        int manip_failures = 0;
    };

    struct Aggregate
    {
        int task = 0;  // 0 = all tasks
        std::string method;
        int n = 0;
        double score_mean = 0.0;
        double score_stderr = 0.0;
        double present_rate = 0.0;
        double time_mean = 0.0;
        double time_stderr = 0.0;
        double planned_rate = 0.0;
    };

    struct Report
    {
        std::vector<TrialRow> rows;
        std::vector<Aggregate> aggregates;
        double wall_seconds = 0.0;

        const Aggregate *find (int task, std::string_view method) const
        {
            for (const auto &a : aggregates)
                if (a.task == task && a.method == method)
                    return &a;
            return nullptr;
        }
    };

    namespace detail
    {
        /// Mean and standard error, summed in sorted order so the result is independent of row order.
        inline std::pair<double, double> mean_stderr (std::vector<double> v)
        {
            if (v.empty ())
                return {0.0, 0.0};
            std::sort (v.begin (), v.end ());
            const double n = static_cast<double> (v.size ());
            const double mean = std::accumulate (v.begin (), v.end (), 0.0) / n;
            if (v.size () < 2)
                return {mean, 0.0};
            std::vector<double> sq;
            sq.reserve (v.size ());
            for (double x : v)
                sq.push_back ((x - mean) * (x - mean));
            std::sort (sq.begin (), sq.end ());
            const double var = std::accumulate (sq.begin (), sq.end (), 0.0) / (n - 1.0);
            return {mean, std::sqrt (var / n)};
        }

        inline Aggregate aggregate (int task, const std::string &method, const std::vector<const TrialRow *> &rows)
        {
            Aggregate a;
            a.task = task;
            a.method = method;
            a.n = static_cast<int> (rows.size ());
            std::vector<double> score, time, present, planned;
            for (const TrialRow *r : rows)
            {
                score.push_back (r->semantic_score);
                present.push_back (r->all_present ? 1.0 : 0.0);
                planned.push_back (r->planned ? 1.0 : 0.0);
                if (r->planned)
                    time.push_back (r->exec_time);
            }
            std::tie (a.score_mean, a.score_stderr) = mean_stderr (score);
            std::tie (a.time_mean, a.time_stderr) = mean_stderr (time);
            a.present_rate = mean_stderr (present).first;
            a.planned_rate = mean_stderr (planned).first;
            return a;
        }
    } // namespace detail

    /// Per task x method aggregates followed by per-method aggregates over all tasks (task = 0).
    inline std::vector<Aggregate> aggregate_rows (const std::vector<TrialRow> &rows)
    {
        std::map<std::pair<int, std::string>, std::vector<const TrialRow *>> by_task;
        std::map<std::string, std::vector<const TrialRow *>> by_method;
        std::vector<std::string> method_order;
        for (const auto &r : rows)
        {
            by_task[{r.task, r.method}].push_back (&r);
            if (!by_method.count (r.method))
                method_order.push_back (r.method);
            by_method[r.method].push_back (&r);
        }
        std::vector<Aggregate> out;
        for (const auto &[key, rs] : by_task)
            out.push_back (detail::aggregate (key.first, key.second, rs));
        std::sort (method_order.begin (), method_order.end ());
        for (const auto &m : method_order)
            out.push_back (detail::aggregate (0, m, by_method[m]));
        return out;
    }

    /// Run one method on one prepared context.
    inline TaskMotionPlan plan_method (Method m, PlanningContext &ctx, LanguageModel &model, const PipelineConfig &cfg,
                                       std::uint64_t seed)
    {
        switch (m)
        {
        case Method::LlmGrop: return run_pipeline (ctx, model, cfg, seed).plan;
        case Method::Latp: return plan_latp (ctx, model, cfg, seed);
        case Method::Tpra: return plan_tpra (ctx, seed);
        case Method::GropRandom: return plan_grop_random (ctx, seed, cfg.sampler.candidates);
        }
        throw Error ("unknown method");
    }

    /// Reference relations for scoring a task's layouts.
    inline RelationSet reference_relations (const Scene &scene, LanguageModel &model, const OracleConfig &cfg)
    {
        return generate_consistent_relations (scene.object_names (), model, cfg).relations;
    }

    /// Rows for one task x trial, every method in cfg.methods order.
    inline std::vector<TrialRow> run_trial (const BenchmarkTask &task, int trial, const RelationSet &reference,
                                            const BenchmarkConfig &cfg)
    {
        const auto t = static_cast<std::uint64_t> (trial);
        const auto id = static_cast<std::uint64_t> (task.id);
        int side = -1;
        Scene scene = task.scene;
        if (cfg.randomize_chair)
        {
            side = static_cast<int> (derive_seed (cfg.seed, "chair", {id, t}) % 4);
            scene = place_chair (scene, side);
        }
        const std::uint64_t plan_seed = derive_seed (cfg.seed, "plan", {id, t});
        FailureModel fm = cfg.failure;
        fm.seed = derive_seed (cfg.seed, "exec", {id, t});
        PlanningContext ctx (scene, rasterize (scene, cfg.pipeline.resolution), cfg.pipeline.planner);
        std::vector<TrialRow> rows;
        for (Method m : cfg.methods)
        {
            TrialRow row;
            row.task = task.id;
            row.method = std::string (to_string (m));
            row.trial = trial;
            row.seed = plan_seed;
            row.chair_side = side;
            try
            {
                const auto model = cfg.oracle ();
                const TaskMotionPlan plan = plan_method (m, ctx, *model, cfg.pipeline, plan_seed);
                const Outcome o = execute (plan, scene, fm, reference);
                row.planned = true;
                row.semantic_score = o.semantic_score;
                row.all_present = o.all_present;
                row.exec_time = o.exec_time;
                row.plan_cost = plan.cost;
                row.plan_utility = plan.utility;
                row.nav_failures = o.nav_failures;
                row.manip_failures = o.manip_failures;
            }
            catch (const Error &e)
            {
                row.error = e.what ();
            }
            rows.push_back (std::move (row));
        }
        return rows;
    }

    /**
     * @brief Every task x trial x method. Trials share the chair placement, the
     *        planning seed and the execution seed across methods, and may run on
     *        `jobs` threads; rows come out in (task, trial, method) order either way.
     */
    inline Report run_benchmark (const std::vector<BenchmarkTask> &tasks, const BenchmarkConfig &cfg, unsigned jobs = 1)
    {
        if (cfg.trials < 1)
            throw Error ("trials must be at least 1");
        if (!cfg.oracle || !cfg.reference)
            throw Error ("benchmark needs oracle and reference model factories");
        const auto t0 = std::chrono::steady_clock::now ();
        std::vector<RelationSet> references;
        for (const auto &task : tasks)
        {
            const auto ref_model = cfg.reference ();
            references.push_back (reference_relations (task.scene, *ref_model, cfg.pipeline.oracle));
        }
        const std::size_t units = tasks.size () * static_cast<std::size_t> (cfg.trials);
        std::vector<std::vector<TrialRow>> results (units);
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
            for (std::size_t u; (u = next.fetch_add (1)) < units;)
            {
                try
                {
                    const std::size_t ti = u / static_cast<std::size_t> (cfg.trials);
                    results[u] = run_trial (tasks[ti], static_cast<int> (u % static_cast<std::size_t> (cfg.trials)), references[ti], cfg);
                }
                catch (...)
                {
                    std::lock_guard lock (failure_mutex);
                    if (!failure)
                        failure = std::current_exception ();
                }
            }
        };
        jobs = std::max (1u, jobs);
        if (jobs == 1)
            worker ();
        else
        {
            std::vector<std::thread> pool;
            for (unsigned j = 0; j < jobs; ++j)
                pool.emplace_back (worker);
            for (auto &th : pool)
                th.join ();
        }
        if (failure)
            std::rethrow_exception (failure);
        Report report;
        for (auto &r : results)
            for (auto &row : r)
                report.rows.push_back (std::move (row));
        report.aggregates = aggregate_rows (report.rows);
        report.wall_seconds = std::chrono::duration<double> (std::chrono::steady_clock::now () - t0).count ();
        return report;
    }

    inline nlohmann::json report_to_json (const Report &r)
    {
        nlohmann::json rows = nlohmann::json::array ();
        for (const auto &t : r.rows)
            rows.push_back ({{"task", t.task},
                             {"method", t.method},
                             {"trial", t.trial},
                             {"seed", t.seed},
                             {"chair_side", t.chair_side},
                             {"planned", t.planned},
                             {"error", t.error},
                             {"semantic_score", t.semantic_score},
                             {"all_present", t.all_present},
                             {"exec_time", t.exec_time},
                             {"plan_cost", t.plan_cost},
                             {"plan_utility", t.plan_utility},
                             {"nav_failures", t.nav_failures},
                             {"manip_failures", t.manip_failures}});
        nlohmann::json aggs = nlohmann::json::array ();
        for (const auto &a : r.aggregates)
            aggs.push_back ({{"task", a.task},
                             {"method", a.method},
                             {"n", a.n},
                             {"score_mean", a.score_mean},
                             {"score_stderr", a.score_stderr},
                             {"present_rate", a.present_rate},
                             {"time_mean", a.time_mean},
                             {"time_stderr", a.time_stderr},
                             {"planned_rate", a.planned_rate}});
        return {{"rows", rows}, {"aggregates", aggs}};
    }

    inline std::string report_to_csv (const Report &r)
    {
        std::ostringstream os;
        os.precision (10);
        os << "task,method,trial,seed,chair_side,planned,semantic_score,all_present,exec_time,plan_cost,plan_utility,nav_failures,manip_failures\n";
        for (const auto &t : r.rows)
            os << t.task << ',' << t.method << ',' << t.trial << ',' << t.seed << ',' << t.chair_side << ',' << (t.planned ? 1 : 0)
               << ',' << t.semantic_score << ',' << (t.all_present ? 1 : 0) << ',' << t.exec_time << ',' << t.plan_cost << ','
               << t.plan_utility << ',' << t.nav_failures << ',' << t.manip_failures << '\n';
        return os.str ();
    }

    /// Score-vs-time summary per method over all tasks, one whitespace-separated row each.
    inline std::string report_summary (const Report &r)
    {
        std::ostringstream os;
        os.precision (6);
        os << "# method time_mean time_stderr score_mean score_stderr present_rate\n";
        for (const auto &a : r.aggregates)
            if (a.task == 0)
                os << a.method << ' ' << a.time_mean << ' ' << a.time_stderr << ' ' << a.score_mean << ' ' << a.score_stderr
                   << ' ' << a.present_rate << '\n';
        return os.str ();
    }
} // namespace llmgrop
