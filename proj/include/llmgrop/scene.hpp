#pragma once
/**
 * @file
 * @brief World model (tables, objects, obstacles, robot) and its rasterization
 *        into an inflated occupancy grid.
 */

#include <llmgrop/error.hpp>
#include <llmgrop/geometry.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace llmgrop
{
    inline constexpr double kDefaultResolution = 0.05;

    struct ObjectSpec
    {
        std::string name;
        Shape footprint;
        double height = 0.0;
        /// Can receive stacked objects.
        bool stack_base = false;
        /// World position where the object initially rests.
        Vec2 source;
    };

    struct Table
    {
        std::string id;
        Shape shape;
        /// Pose of the tabletop frame (origin at the surface center).
        Pose2 pose;

        PlacedShape placed () const { return {shape, pose}; }
    };

    enum class ObstacleKind
    {
        Static,
        Dynamic
    };

    struct Obstacle
    {
        std::string id;
        Shape footprint;
        Pose2 pose;
        ObstacleKind kind = ObstacleKind::Static;

        PlacedShape placed () const { return {footprint, pose}; }
    };

    struct RobotSpec
    {
        double base_radius = 0.3;
        /// Largest horizontal base-to-placement distance at which a place is possible.
        double reach_max = 1.0;
        double nav_speed = 0.5;
        /// Seconds per pick or per place.
        double manip_time = 5.0;
        Pose2 start;
    };

    struct Scene
    {
        std::optional<int> task_id;
        std::string target_table;
        std::optional<Box> workspace;
        std::vector<Table> tables;
        std::vector<ObjectSpec> objects;
        std::vector<Obstacle> obstacles;
        RobotSpec robot;

        const Table &target () const
        {
            for (const auto &t : tables)
                if (t.id == target_table)
                    return t;
            throw InvalidScene (target_table, "target table not found");
        }

        const ObjectSpec &object (const std::string &name) const
        {
            for (const auto &o : objects)
                if (o.name == name)
                    return o;
            throw UnknownObject (name);
        }

        std::vector<std::string> object_names () const
        {
            std::vector<std::string> names;
            names.reserve (objects.size ());
            for (const auto &o : objects)
                names.push_back (o.name);
            return names;
        }
    };

    /// Throws InvalidScene / DuplicateName on the first violated invariant.
    inline void validate (const Scene &scene)
    {
        std::set<std::string> names;
        for (const auto &o : scene.objects)
        {
            if (!is_positive (o.footprint))
                throw InvalidScene (o.name, "footprint dimensions must be strictly positive");
            if (!names.insert (o.name).second)
                throw DuplicateName (o.name);
        }
        std::set<std::string> ids;
        for (const auto &t : scene.tables)
        {
            if (!is_positive (t.shape))
                throw InvalidScene (t.id, "table dimensions must be strictly positive");
            if (!ids.insert (t.id).second)
                throw DuplicateName (t.id);
        }
        for (std::size_t i = 0; i < scene.tables.size (); ++i)
            for (std::size_t j = i + 1; j < scene.tables.size (); ++j)
                if (footprints_overlap (scene.tables[i].placed (), scene.tables[j].placed ()))
                    throw InvalidScene (scene.tables[i].id, "overlaps table " + scene.tables[j].id);
        for (const auto &o : scene.obstacles)
        {
            if (!is_positive (o.footprint))
                throw InvalidScene (o.id, "obstacle dimensions must be strictly positive");
            if (!ids.insert (o.id).second)
                throw DuplicateName (o.id);
        }
        const RobotSpec &r = scene.robot;
        if (!(r.base_radius > 0 && r.reach_max > 0 && r.nav_speed > 0 && r.manip_time > 0))
            throw InvalidScene ("robot", "all robot parameters must be strictly positive");
        if (!(r.reach_max > r.base_radius))
            throw InvalidScene ("robot", "reach_max must exceed base_radius");
        if (scene.tables.empty ())
            throw InvalidScene ("tables", "scene needs at least one table");
        (void)scene.target ();
        if (scene.workspace && !(scene.workspace->max.x > scene.workspace->min.x &&
                                 scene.workspace->max.y > scene.workspace->min.y))
            throw InvalidScene ("workspace", "max must exceed min");
    }

    namespace detail
    {
        using nlohmann::json;

        inline Shape shape_from_json (const json &j, const std::string &entity)
        {
            const std::string type = j.at ("type").get<std::string> ();
            if (type == "rect")
                return RectShape{j.at ("w").get<double> (), j.at ("h").get<double> ()};
            if (type == "circle")
                return CircleShape{j.at ("radius").get<double> ()};
            throw InvalidScene (entity, "unknown shape type '" + type + "'");
        }

        inline json shape_to_json (const Shape &s)
        {
            if (const auto *r = std::get_if<RectShape> (&s))
                return {{"type", "rect"}, {"w", r->w}, {"h", r->h}};
            return {{"type", "circle"}, {"radius", std::get<CircleShape> (s).radius}};
        }

        inline Vec2 vec_from_json (const json &j) { return {j.at (0).get<double> (), j.at (1).get<double> ()}; }

        inline Pose2 pose_from_json (const json &j)
        {
            return {j.at (0).get<double> (), j.at (1).get<double> (), j.size () > 2 ? j.at (2).get<double> () : 0.0};
        }

        inline std::size_t line_of (const std::string &text, std::size_t byte)
        {
            byte = std::min (byte, text.size ());
            return 1 + static_cast<std::size_t> (std::count (text.begin (), text.begin () + byte, '\n'));
        }
    } // namespace detail

    /// Parse a scene from JSON text and validate every invariant.
    inline Scene parse_scene (const std::string &text)
    {
        using nlohmann::json;
        json doc;
        try
        {
            doc = json::parse (text);
        }
        catch (const json::parse_error &e)
        {
            const std::size_t line = detail::line_of (text, e.byte > 0 ? e.byte - 1 : 0);
            throw SceneParseError ("scene parse error at line " + std::to_string (line) + ": " + e.what (), line);
        }

        Scene scene;
        std::string entity = "scene";
        try
        {
            if (doc.contains ("task"))
                scene.task_id = doc.at ("task").get<int> ();
            if (doc.contains ("workspace"))
            {
                entity = "workspace";
                scene.workspace = Box{detail::vec_from_json (doc["workspace"].at ("min")),
                                      detail::vec_from_json (doc["workspace"].at ("max"))};
            }
            for (const auto &t : doc.at ("tables"))
            {
                entity = t.value ("id", std::string ("tables[") + std::to_string (scene.tables.size ()) + "]");
                scene.tables.push_back ({t.at ("id").get<std::string> (), detail::shape_from_json (t.at ("shape"), entity),
                                         detail::pose_from_json (t.at ("pose"))});
            }
            for (const auto &o : doc.at ("objects"))
            {
                entity = o.value ("name", std::string ("objects[") + std::to_string (scene.objects.size ()) + "]");
                scene.objects.push_back ({o.at ("name").get<std::string> (), detail::shape_from_json (o.at ("shape"), entity),
                                          o.value ("height", 0.0), o.value ("stack_base", false),
                                          detail::vec_from_json (o.at ("source"))});
            }
            if (doc.contains ("obstacles"))
                for (const auto &o : doc.at ("obstacles"))
                {
                    entity = o.value ("id", std::string ("obstacles[") + std::to_string (scene.obstacles.size ()) + "]");
                    const std::string kind = o.value ("kind", std::string ("static"));
                    if (kind != "static" && kind != "dynamic")
                        throw InvalidScene (entity, "unknown obstacle kind '" + kind + "'");
                    scene.obstacles.push_back ({o.at ("id").get<std::string> (), detail::shape_from_json (o.at ("shape"), entity),
                                                detail::pose_from_json (o.at ("pose")),
                                                kind == "dynamic" ? ObstacleKind::Dynamic : ObstacleKind::Static});
                }
            entity = "robot";
            const json &r = doc.at ("robot");
            scene.robot.base_radius = r.at ("base_radius").get<double> ();
            scene.robot.reach_max = r.at ("reach_max").get<double> ();
            scene.robot.nav_speed = r.at ("nav_speed").get<double> ();
            scene.robot.manip_time = r.at ("manip_time").get<double> ();
            if (r.contains ("start"))
                scene.robot.start = detail::pose_from_json (r.at ("start"));
            scene.target_table = doc.value ("target_table", scene.tables.empty () ? std::string{} : scene.tables.front ().id);
        }
        catch (const json::exception &e)
        {
            throw InvalidScene (entity, e.what ());
        }
        validate (scene);
        return scene;
    }

    inline Scene load_scene (const std::string &path)
    {
        std::ifstream in (path);
        if (!in)
            throw Error ("cannot open scene file: " + path);
        std::stringstream ss;
        ss << in.rdbuf ();
        return parse_scene (ss.str ());
    }

    inline nlohmann::json scene_to_json (const Scene &scene)
    {
        using nlohmann::json;
        json doc;
        if (scene.task_id)
            doc["task"] = *scene.task_id;
        doc["target_table"] = scene.target_table;
        if (scene.workspace)
            doc["workspace"] = {{"min", {scene.workspace->min.x, scene.workspace->min.y}},
                                {"max", {scene.workspace->max.x, scene.workspace->max.y}}};
        doc["tables"] = json::array ();
        for (const auto &t : scene.tables)
            doc["tables"].push_back ({{"id", t.id}, {"shape", detail::shape_to_json (t.shape)}, {"pose", {t.pose.x, t.pose.y, t.pose.theta}}});
        doc["objects"] = json::array ();
        for (const auto &o : scene.objects)
            doc["objects"].push_back ({{"name", o.name},
                                       {"shape", detail::shape_to_json (o.footprint)},
                                       {"height", o.height},
                                       {"stack_base", o.stack_base},
                                       {"source", {o.source.x, o.source.y}}});
        doc["obstacles"] = json::array ();
        for (const auto &o : scene.obstacles)
            doc["obstacles"].push_back ({{"id", o.id},
                                         {"shape", detail::shape_to_json (o.footprint)},
                                         {"pose", {o.pose.x, o.pose.y, o.pose.theta}},
                                         {"kind", o.kind == ObstacleKind::Dynamic ? "dynamic" : "static"}});
        const RobotSpec &r = scene.robot;
        doc["robot"] = {{"base_radius", r.base_radius},
                        {"reach_max", r.reach_max},
                        {"nav_speed", r.nav_speed},
                        {"manip_time", r.manip_time},
                        {"start", {r.start.x, r.start.y, r.start.theta}}};
        return doc;
    }

    struct Cell
    {
        int x = 0;
        int y = 0;
        friend constexpr bool operator== (Cell, Cell) = default;
    };

    /// Row-major boolean occupancy raster. Cells outside the raster count as occupied.
    class OccupancyGrid
    {
      public:
        OccupancyGrid () = default;
        OccupancyGrid (int width, int height, double resolution, Vec2 origin)
            : width_ (width), height_ (height), resolution_ (resolution), origin_ (origin),
              cells_ (static_cast<std::size_t> (width) * static_cast<std::size_t> (height), 0)
        {
        }

        int width () const noexcept { return width_; }
        int height () const noexcept { return height_; }
        double resolution () const noexcept { return resolution_; }
        Vec2 origin () const noexcept { return origin_; }

        bool in_bounds (Cell c) const noexcept { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
        std::size_t index (Cell c) const noexcept { return static_cast<std::size_t> (c.y) * width_ + c.x; }
        Cell cell_at (std::size_t idx) const noexcept
        {
            return {static_cast<int> (idx % width_), static_cast<int> (idx / width_)};
        }

        bool occupied (Cell c) const noexcept { return !in_bounds (c) || cells_[index (c)] != 0; }
        bool free (Cell c) const noexcept { return !occupied (c); }
        void set (Cell c, bool occ)
        {
            if (in_bounds (c))
                cells_[index (c)] = occ ? 1 : 0;
        }

        /// Cell containing a world point (may be out of bounds).
        Cell cell_of (Vec2 p) const
        {
            return {static_cast<int> (std::floor ((p.x - origin_.x) / resolution_)),
                    static_cast<int> (std::floor ((p.y - origin_.y) / resolution_))};
        }

        Vec2 center_of (Cell c) const
        {
            return {origin_.x + (c.x + 0.5) * resolution_, origin_.y + (c.y + 0.5) * resolution_};
        }

        Box box_of (Cell c) const
        {
            return {{origin_.x + c.x * resolution_, origin_.y + c.y * resolution_},
                    {origin_.x + (c.x + 1) * resolution_, origin_.y + (c.y + 1) * resolution_}};
        }

        std::size_t occupied_count () const
        {
            return static_cast<std::size_t> (std::count (cells_.begin (), cells_.end (), std::uint8_t{1}));
        }

        friend bool operator== (const OccupancyGrid &, const OccupancyGrid &) = default;

      private:
        int width_ = 0;
        int height_ = 0;
        double resolution_ = kDefaultResolution;
        Vec2 origin_;
        std::vector<std::uint8_t> cells_;
    };

    /// Region the grid covers: the declared workspace, or everything in the scene plus a 1 m margin.
    inline Box scene_extent (const Scene &scene)
    {
        if (scene.workspace)
            return *scene.workspace;
        Box b{scene.robot.start.position (), scene.robot.start.position ()};
        auto grow = [&b] (const Box &o) {
            b.min = {std::min (b.min.x, o.min.x), std::min (b.min.y, o.min.y)};
            b.max = {std::max (b.max.x, o.max.x), std::max (b.max.y, o.max.y)};
        };
        for (const auto &t : scene.tables)
            grow (bounding_box (t.placed ()));
        for (const auto &o : scene.obstacles)
            grow (bounding_box (o.placed ()));
        for (const auto &o : scene.objects)
            grow ({o.source, o.source});
        constexpr double margin = 1.0;
        return {{b.min.x - margin, b.min.y - margin}, {b.max.x + margin, b.max.y + margin}};
    }

    /**
     * @brief Rasterize tables and obstacles, each inflated by the robot base radius.
     *
     * A cell is occupied iff its square comes strictly closer than `base_radius`
     * to some footprint. Dynamic obstacles are included only when
     * `include_dynamic` is set (the prior map omits them).
     */
    inline OccupancyGrid rasterize (const Scene &scene, double resolution = kDefaultResolution, bool include_dynamic = true)
    {
        if (!(resolution > 0.0))
            throw Error ("resolution must be positive");
        const Box ext = scene_extent (scene);
        const int w = std::max (1, static_cast<int> (std::ceil ((ext.max.x - ext.min.x) / resolution - 1e-9)));
        const int h = std::max (1, static_cast<int> (std::ceil ((ext.max.y - ext.min.y) / resolution - 1e-9)));
        OccupancyGrid grid (w, h, resolution, ext.min);
        const double inflation = scene.robot.base_radius;

        auto stamp = [&] (const PlacedShape &s) {
            const Box bb = bounding_box (s, inflation);
            const Cell lo = grid.cell_of (bb.min), hi = grid.cell_of (bb.max);
            for (int y = std::max (0, lo.y); y <= std::min (h - 1, hi.y); ++y)
                for (int x = std::max (0, lo.x); x <= std::min (w - 1, hi.x); ++x)
                    if (distance_to_box (s, grid.box_of ({x, y})) < inflation - kGeomEps)
                        grid.set ({x, y}, true);
        };
        for (const auto &t : scene.tables)
            stamp (t.placed ());
        for (const auto &o : scene.obstacles)
            if (include_dynamic || o.kind == ObstacleKind::Static)
                stamp (o.placed ());
        return grid;
    }

    /// Overlap test for two objects placed at positions in a shared frame.
    inline bool footprints_overlap (const ObjectSpec &a, Vec2 at_a, const ObjectSpec &b, Vec2 at_b)
    {
        return footprints_overlap (PlacedShape{a.footprint, {at_a.x, at_a.y, 0.0}},
                                   PlacedShape{b.footprint, {at_b.x, at_b.y, 0.0}});
    }
} // namespace llmgrop
