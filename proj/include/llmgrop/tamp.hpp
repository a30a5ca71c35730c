#pragma once
/**
 * @file
 * @brief Task-and-motion planning over candidate configurations: standing-pose
 *        generation around the target table, reach-based feasibility, grid
 *        navigation cost, and utility-maximizing plan selection.
 *
 * Plan utility is  U = prod_i f_i - lambda * (total_cost / C_norm), where f_i is
 * the feasibility of the i-th placement from its chosen standing pose and
 * C_norm is the time to traverse the target table's perimeter.
 */

#include <llmgrop/error.hpp>
#include <llmgrop/grounding.hpp>
#include <llmgrop/navigation.hpp>
#include <llmgrop/scene.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace llmgrop
{
    struct NavGoal
    {
        Pose2 loc;
        /// Table side the pose belongs to ("north", "south", "east", "west" in the
        /// table frame, "arc" for round tables, empty for fetch goals).
        std::string side;

        friend bool operator== (const NavGoal &, const NavGoal &) = default;
    };

    struct PlannerParams
    {
        double lambda = 0.3;
        double pose_spacing = 0.2;
        /// Standoff from the table edge is base_radius + standoff_margin.
        double standoff_margin = 0.05;
    };

    /**
     * @brief Standing poses along the table perimeter at `standoff` from its edge,
     *        each facing the table center. Poses on occupied cells are dropped.
     * @throws NoFreePose if every perimeter pose is blocked.
     */
    inline std::vector<NavGoal> candidate_standing_poses (const Table &table, const OccupancyGrid &grid, double spacing,
                                                          double standoff)
    {
        if (!(spacing > 0.0))
            throw Error ("pose spacing must be positive");
        std::vector<NavGoal> raw;
        auto facing = [&table] (Vec2 w) {
            return Pose2{w.x, w.y, std::atan2 (table.pose.y - w.y, table.pose.x - w.x)};
        };
        if (const auto *r = std::get_if<RectShape> (&table.shape))
        {
            struct Side
            {
                const char *name;
                double length;
                Vec2 origin, dir;
            };
            const double hx = 0.5 * r->w, hy = 0.5 * r->h;
            const Side sides[] = {{"south", r->w, {0.0, -(hy + standoff)}, {1.0, 0.0}},
                                  {"east", r->h, {hx + standoff, 0.0}, {0.0, 1.0}},
                                  {"north", r->w, {0.0, hy + standoff}, {-1.0, 0.0}},
                                  {"west", r->h, {-(hx + standoff), 0.0}, {0.0, -1.0}}};
            for (const Side &s : sides)
            {
                const int n = static_cast<int> (std::floor (s.length / spacing + 1e-9)) + 1;
                for (int k = 0; k < n; ++k)
                {
                    const double t = -0.5 * (n - 1) * spacing + k * spacing;
                    raw.push_back ({facing (table.pose.to_world (s.origin + t * s.dir)), s.name});
                }
            }
        }
        else
        {
            const double R = std::get<CircleShape> (table.shape).radius + standoff;
            const int n = std::max (1, static_cast<int> (std::floor (2.0 * std::numbers::pi * R / spacing + 1e-9)));
            for (int k = 0; k < n; ++k)
            {
                const double a = 2.0 * std::numbers::pi * k / n;
                raw.push_back ({facing (table.pose.to_world ({R * std::cos (a), R * std::sin (a)})), "arc"});
            }
        }
        std::vector<NavGoal> out;
        for (auto &g : raw)
            if (grid.free (grid.cell_of (g.loc.position ())))
                out.push_back (std::move (g));
        if (out.empty ())
            throw NoFreePose ("every standing pose around table " + table.id + " is blocked");
        return out;
    }

    /// Linear reach model: 1 at the base radius, 0 at and beyond reach_max.
    inline double feasibility (const NavGoal &goal, Vec2 placement, const RobotSpec &robot)
    {
        const double d = distance (goal.loc.position (), placement);
        if (d > robot.reach_max)
            return 0.0;
        return std::clamp (1.0 - (d - robot.base_radius) / (robot.reach_max - robot.base_radius), 0.0, 1.0);
    }

    /**
     * @brief Travel time along the shortest 8-connected grid path.
     * @throws Unreachable if no path exists; Error if an endpoint is occupied.
     */
    inline double nav_cost (const Pose2 &from, const NavGoal &to, const OccupancyGrid &grid, double speed)
    {
        const Cell a = grid.cell_of (from.position ()), b = grid.cell_of (to.loc.position ());
        if (grid.occupied (a) || grid.occupied (b))
            throw Error ("navigation endpoint on an occupied cell");
        const auto path = astar (grid, a, b);
        if (!path)
            throw Unreachable ("no path between the given poses");
        return path->moves.meters (grid.resolution ()) / speed;
    }

    struct Leg
    {
        Pose2 from;
        Pose2 to;
        double length = 0.0;  // m
        double time = 0.0;    // s
        std::vector<Vec2> path;
    };

    struct PlanStep
    {
        std::string object;
        NavGoal fetch;
        Leg fetch_leg;
        NavGoal place;
        Leg place_leg;
        Placement target;       // table frame
        Vec2 target_world;
        double reach = 0.0;     // base-to-placement distance at the place pose
        double feasibility = 0.0;
        double utility = 0.0;   // per-step utility used to pick the place pose
    };

    struct TaskMotionPlan
    {
        std::vector<PlanStep> steps;
        Configuration configuration;
        double utility = 0.0;
        double cost = 0.0;          // s, navigation plus manipulation
        double feasibility = 0.0;   // product of step feasibilities
        double lambda = 0.0;
        double cost_norm = 0.0;     // s
    };

    /// One standing pose evaluated for a placement.
    struct PoseOption
    {
        std::size_t pose;
        double feasibility;
        double cost;     // s, fetch pose to here plus here to the next fetch pose
        double utility;
    };

    /// Picks a place pose among the options, or nullopt when none is acceptable.
    using PoseChooser = std::function<std::optional<std::size_t> (const std::vector<PoseOption> &)>;

    /// Highest utility among options with positive feasibility; ties go to lower cost, then lower index.
    inline std::optional<std::size_t> choose_max_utility (const std::vector<PoseOption> &options)
    {
        std::optional<std::size_t> best;
        for (std::size_t i = 0; i < options.size (); ++i)
        {
            const PoseOption &o = options[i];
            if (!(o.feasibility > 0.0) || !std::isfinite (o.cost))
                continue;
            if (!best)
            {
                best = i;
                continue;
            }
            const PoseOption &b = options[*best];
            if (o.utility > b.utility || (o.utility == b.utility && o.cost < b.cost))
                best = i;
        }
        return best;
    }

    /**
     * @brief Immutable planning inputs for one scene and grid, plus a cache of
     *        single-source cost fields. Not safe for concurrent use.
     */
    class PlanningContext
    {
      public:
        PlanningContext (const Scene &scene, OccupancyGrid grid, PlannerParams params = {})
            : scene_ (scene), grid_ (std::move (grid)), params_ (params)
        {
            poses_ = candidate_standing_poses (scene_.target (), grid_, params_.pose_spacing,
                                               scene_.robot.base_radius + params_.standoff_margin);
            cost_norm_ = perimeter (scene_.target ().shape) / scene_.robot.nav_speed;
        }

        const Scene &scene () const noexcept { return scene_; }
        const OccupancyGrid &grid () const noexcept { return grid_; }
        const PlannerParams &params () const noexcept { return params_; }
        const std::vector<NavGoal> &standing_poses () const noexcept { return poses_; }
        double cost_norm () const noexcept { return cost_norm_; }

        const CostField &field (Cell source)
        {
            const std::size_t key = grid_.index (source);
            auto it = fields_.find (key);
            if (it == fields_.end ())
                it = fields_.emplace (key, std::make_unique<CostField> (grid_, source)).first;
            return *it->second;
        }

        /// Nearest free cell to the object's source; the robot picks from there.
        const NavGoal &fetch_goal (const std::string &object)
        {
            auto it = fetch_.find (object);
            if (it != fetch_.end ())
                return it->second;
            const Vec2 src = scene_.object (object).source;
            const Cell c = grid_.cell_of (src);
            std::optional<Cell> best;
            if (grid_.free (c))
                best = c;
            else
            {
                double best_d = std::numeric_limits<double>::infinity ();
                for (int y = 0; y < grid_.height (); ++y)
                    for (int x = 0; x < grid_.width (); ++x)
                        if (grid_.free ({x, y}))
                        {
                            const double d = distance (grid_.center_of ({x, y}), src);
                            if (d < best_d)
                                best_d = d, best = Cell{x, y};
                        }
            }
            if (!best || distance (grid_.center_of (*best), src) > scene_.robot.reach_max)
                throw Infeasible (object);
            const Vec2 p = grid_.center_of (*best);
            const double theta = p == src ? 0.0 : std::atan2 (src.y - p.y, src.x - p.x);
            return fetch_.emplace (object, NavGoal{{p.x, p.y, theta}, {}}).first->second;
        }

      private:
        Scene scene_;
        OccupancyGrid grid_;
        PlannerParams params_;
        std::vector<NavGoal> poses_;
        double cost_norm_ = 1.0;
        std::map<std::size_t, std::unique_ptr<CostField>> fields_;
        std::map<std::string, NavGoal> fetch_;
    };

    namespace detail
    {
        inline Leg make_leg (const PlanningContext &ctx, const CostField &field, Pose2 from, Pose2 to, bool from_is_source)
        {
            const OccupancyGrid &g = ctx.grid ();
            const Cell other = g.cell_of ((from_is_source ? to : from).position ());
            Leg leg;
            leg.from = from;
            leg.to = to;
            leg.length = field.meters (other);
            leg.time = leg.length / ctx.scene ().robot.nav_speed;
            auto cells = field.path_from (other);  // other -> source
            if (from_is_source)
                std::reverse (cells.begin (), cells.end ());
            for (const Cell &c : cells)
                leg.path.push_back (g.center_of (c));
            return leg;
        }
    } // namespace detail

    /**
     * @brief Build a plan for one configuration, choosing each place pose with `chooser`.
     *
     * For every object in the configuration's order: navigate to its fetch goal,
     * pick, navigate to the chosen standing pose, place.
     * @throws Infeasible if the chooser accepts no pose for some object.
     */
    inline TaskMotionPlan plan_with_chooser (const Configuration &cfg, PlanningContext &ctx, const PoseChooser &chooser)
    {
        const Scene &scene = ctx.scene ();
        const OccupancyGrid &grid = ctx.grid ();
        const Table &table = scene.target ();
        const double lambda = ctx.params ().lambda;

        TaskMotionPlan plan;
        plan.configuration = cfg;
        plan.lambda = lambda;
        plan.cost_norm = ctx.cost_norm ();
        plan.feasibility = 1.0;

        Pose2 here = scene.robot.start;
        if (grid.occupied (grid.cell_of (here.position ())))
            throw Error ("robot start pose is on an occupied cell");
        double nav_total = 0.0;
        for (std::size_t k = 0; k < cfg.order.size (); ++k)
        {
            const std::string &name = cfg.order[k];
            PlanStep step;
            step.object = name;
            step.target = cfg.placements.at (name);
            step.target_world = table.pose.to_world (step.target.position);

            step.fetch = ctx.fetch_goal (name);
            const CostField &from_source = ctx.field (grid.cell_of (step.fetch.loc.position ()));
            step.fetch_leg = detail::make_leg (ctx, from_source, here, step.fetch.loc, false);
            if (!std::isfinite (step.fetch_leg.time))
                throw Infeasible (name);

            // The leg out of the place pose is known too: it heads for the next object's fetch pose.
            const CostField *onward = nullptr;
            if (k + 1 < cfg.order.size ())
                onward = &ctx.field (grid.cell_of (ctx.fetch_goal (cfg.order[k + 1]).loc.position ()));

            const auto &poses = ctx.standing_poses ();
            std::vector<PoseOption> options;
            options.reserve (poses.size ());
            for (std::size_t i = 0; i < poses.size (); ++i)
            {
                const double f = feasibility (poses[i], step.target_world, scene.robot);
                const Cell pc = grid.cell_of (poses[i].loc.position ());
                double c = from_source.meters (pc);
                if (onward)
                    c += onward->meters (pc);
                c /= scene.robot.nav_speed;
                options.push_back ({i, f, c, f - lambda * c / ctx.cost_norm ()});
            }
            const auto choice = chooser (options);
            if (!choice || !std::isfinite (options[*choice].cost))
                throw Infeasible (name);
            const PoseOption &chosen = options[*choice];
            step.place = poses[chosen.pose];
            step.place_leg = detail::make_leg (ctx, from_source, step.fetch.loc, step.place.loc, true);
            step.reach = distance (step.place.loc.position (), step.target_world);
            step.feasibility = chosen.feasibility;
            step.utility = chosen.utility;

            nav_total += step.fetch_leg.time + step.place_leg.time;
            plan.feasibility *= step.feasibility;
            here = step.place.loc;
            plan.steps.push_back (std::move (step));
        }
        plan.cost = nav_total + 2.0 * scene.robot.manip_time * static_cast<double> (cfg.order.size ());
        plan.utility = plan.feasibility - lambda * plan.cost / plan.cost_norm;
        return plan;
    }

    /// Plan with per-step utility-maximizing standing poses.
    inline TaskMotionPlan plan_for_configuration (const Configuration &cfg, PlanningContext &ctx)
    {
        return plan_with_chooser (cfg, ctx, choose_max_utility);
    }

    /**
     * @brief Best plan over candidate configurations: highest utility, then
     *        lower cost, then earlier candidate.
     * @throws AllInfeasible if no candidate can be planned.
     */
    inline TaskMotionPlan optimize (const std::vector<Configuration> &candidates, PlanningContext &ctx)
    {
        if (candidates.empty ())
            throw AllInfeasible ("no candidate configurations");
        std::optional<TaskMotionPlan> best;
        std::string last_error;
        for (const auto &cfg : candidates)
        {
            try
            {
                TaskMotionPlan p = plan_for_configuration (cfg, ctx);
                if (!best || p.utility > best->utility || (p.utility == best->utility && p.cost < best->cost))
                    best = std::move (p);
            }
            catch (const Infeasible &e)
            {
                last_error = e.what ();
            }
        }
        if (!best)
            throw AllInfeasible ("every candidate configuration is infeasible (" + last_error + ")");
        return std::move (*best);
    }

    // JSON

    namespace detail
    {
        inline nlohmann::json pose_json (const Pose2 &p) { return {p.x, p.y, p.theta}; }
        inline Pose2 pose_from (const nlohmann::json &j) { return {j.at (0).get<double> (), j.at (1).get<double> (), j.at (2).get<double> ()}; }

        inline nlohmann::json leg_json (const Leg &l)
        {
            nlohmann::json path = nlohmann::json::array ();
            for (const Vec2 &p : l.path)
                path.push_back ({p.x, p.y});
            return {{"from", pose_json (l.from)}, {"to", pose_json (l.to)}, {"length", l.length}, {"time", l.time}, {"path", path}};
        }

        inline Leg leg_from (const nlohmann::json &j)
        {
            Leg l;
            l.from = pose_from (j.at ("from"));
            l.to = pose_from (j.at ("to"));
            l.length = j.at ("length").get<double> ();
            l.time = j.at ("time").get<double> ();
            for (const auto &p : j.at ("path"))
                l.path.push_back ({p.at (0).get<double> (), p.at (1).get<double> ()});
            return l;
        }
    } // namespace detail

    inline nlohmann::json plan_to_json (const TaskMotionPlan &plan)
    {
        nlohmann::json steps = nlohmann::json::array ();
        for (const auto &s : plan.steps)
            steps.push_back ({{"object", s.object},
                              {"fetch", {{"loc", detail::pose_json (s.fetch.loc)}}},
                              {"fetch_leg", detail::leg_json (s.fetch_leg)},
                              {"place", {{"loc", detail::pose_json (s.place.loc)}, {"side", s.place.side}}},
                              {"place_leg", detail::leg_json (s.place_leg)},
                              {"target", {{"x", s.target.position.x}, {"y", s.target.position.y}, {"stack_level", s.target.stack_level}}},
                              {"target_world", {s.target_world.x, s.target_world.y}},
                              {"reach", s.reach},
                              {"feasibility", s.feasibility},
                              {"utility", s.utility}});
        return {{"steps", steps},
                {"configuration", configuration_to_json (plan.configuration)},
                {"seed", plan.configuration.seed},
                {"anchor", plan.configuration.anchor},
                {"utility", plan.utility},
                {"cost", plan.cost},
                {"feasibility", plan.feasibility},
                {"lambda", plan.lambda},
                {"cost_norm", plan.cost_norm}};
    }

    inline TaskMotionPlan plan_from_json (const nlohmann::json &j)
    {
        TaskMotionPlan plan;
        plan.configuration = configuration_from_json (j.at ("configuration"));
        plan.configuration.seed = j.value ("seed", std::uint64_t{0});
        plan.configuration.anchor = j.value ("anchor", std::string{});
        plan.utility = j.at ("utility").get<double> ();
        plan.cost = j.at ("cost").get<double> ();
        plan.feasibility = j.at ("feasibility").get<double> ();
        plan.lambda = j.value ("lambda", 0.0);
        plan.cost_norm = j.value ("cost_norm", 0.0);
        for (const auto &s : j.at ("steps"))
        {
            PlanStep st;
            st.object = s.at ("object").get<std::string> ();
            st.fetch.loc = detail::pose_from (s.at ("fetch").at ("loc"));
            st.fetch_leg = detail::leg_from (s.at ("fetch_leg"));
            st.place.loc = detail::pose_from (s.at ("place").at ("loc"));
            st.place.side = s.at ("place").value ("side", std::string{});
            st.place_leg = detail::leg_from (s.at ("place_leg"));
            const auto &t = s.at ("target");
            st.target = {{t.at ("x").get<double> (), t.at ("y").get<double> ()}, t.value ("stack_level", 0)};
            st.target_world = {s.at ("target_world").at (0).get<double> (), s.at ("target_world").at (1).get<double> ()};
            st.reach = s.at ("reach").get<double> ();
            st.feasibility = s.at ("feasibility").get<double> ();
            st.utility = s.at ("utility").get<double> ();
            plan.steps.push_back (std::move (st));
        }
        return plan;
    }
} // namespace llmgrop
