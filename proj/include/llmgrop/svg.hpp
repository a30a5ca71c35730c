#pragma once
/**
 * @file
 * @brief Top-down SVG rendering of a scene, a layout and (optionally) a plan.
 */

#include <llmgrop/grounding.hpp>
#include <llmgrop/scene.hpp>
#include <llmgrop/tamp.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace llmgrop
{
    namespace detail
    {
        inline std::string xml_escape (const std::string &s)
        {
            std::string out;
            for (char c : s)
                switch (c)
                {
                case '&': out += "&amp;"; break;
                case '<': out += "&lt;"; break;
                case '>': out += "&gt;"; break;
                case '"': out += "&quot;"; break;
                default: out += c;
                }
            return out;
        }

        class SvgCanvas
        {
          public:
            SvgCanvas (Box extent, double scale) : extent_ (extent), scale_ (scale) { os_.precision (6); }

            double px (double x) const { return (x - extent_.min.x) * scale_; }
            double py (double y) const { return (extent_.max.y - y) * scale_; }

            void shape (const PlacedShape &s, const std::string &cls, const std::string &fill, const std::string &title = {})
            {
                const double x = px (s.pose.x), y = py (s.pose.y);
                if (const auto *c = std::get_if<CircleShape> (&s.shape))
                    os_ << "<circle class=\"" << cls << "\" cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << c->radius * scale_
                        << "\" fill=\"" << fill << "\" stroke=\"#333\" stroke-width=\"1\"";
                else
                {
                    const auto &r = std::get<RectShape> (s.shape);
                    const double deg = -s.pose.theta * 180.0 / std::numbers::pi;
                    os_ << "<rect class=\"" << cls << "\" x=\"" << x - 0.5 * r.w * scale_ << "\" y=\"" << y - 0.5 * r.h * scale_
                        << "\" width=\"" << r.w * scale_ << "\" height=\"" << r.h * scale_ << "\" transform=\"rotate(" << deg << ' '
                        << x << ' ' << y << ")\" fill=\"" << fill << "\" stroke=\"#333\" stroke-width=\"1\"";
                }
                if (title.empty ())
                    os_ << "/>\n";
                else
                    os_ << "><title>" << xml_escape (title) << "</title></" << (std::holds_alternative<CircleShape> (s.shape) ? "circle" : "rect")
                        << ">\n";
            }

            void polyline (const std::vector<Vec2> &pts, const std::string &cls, const std::string &stroke)
            {
                if (pts.size () < 2)
                    return;
                os_ << "<polyline class=\"" << cls << "\" fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
                for (std::size_t i = 0; i < pts.size (); ++i)
                    os_ << (i ? " " : "") << px (pts[i].x) << ',' << py (pts[i].y);
                os_ << "\"/>\n";
            }

            void pose (const Pose2 &p, const std::string &cls, const std::string &fill, double radius)
            {
                const double x = px (p.x), y = py (p.y);
                os_ << "<circle class=\"" << cls << "\" cx=\"" << x << "\" cy=\"" << y << "\" r=\"" << radius * scale_
                    << "\" fill=\"" << fill << "\" fill-opacity=\"0.4\" stroke=\"#000\"/>\n";
                os_ << "<line class=\"" << cls << "-heading\" x1=\"" << x << "\" y1=\"" << y << "\" x2=\""
                    << x + radius * scale_ * std::cos (p.theta) << "\" y2=\"" << y - radius * scale_ * std::sin (p.theta)
                    << "\" stroke=\"#000\"/>\n";
            }

            std::string finish () const
            {
                std::ostringstream out;
                out.precision (6);
                const double w = (extent_.max.x - extent_.min.x) * scale_, h = (extent_.max.y - extent_.min.y) * scale_;
                out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
                    << ' ' << h << "\">\n"
                    << "<rect class=\"workspace\" x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"#fafafa\"/>\n"
                    << os_.str () << "</svg>\n";
                return out.str ();
            }

          private:
            Box extent_;
            double scale_;
            std::ostringstream os_;
        };
    } // namespace detail

    /**
     * @brief Render tables, obstacles, placed objects (one `class="object"`
     *        element each) and, if a plan is given, standing poses and paths.
     *        Objects come from the plan when present, otherwise from `layout`.
     */
    inline std::string render_svg (const Scene &scene, const Configuration *layout = nullptr, const TaskMotionPlan *plan = nullptr,
                                   double scale = 100.0)
    {
        detail::SvgCanvas svg (scene_extent (scene), scale);
        for (const auto &t : scene.tables)
            svg.shape (t.placed (), "table", "#d9b38c", t.id);
        for (const auto &o : scene.obstacles)
            svg.shape (o.placed (), "obstacle", o.kind == ObstacleKind::Dynamic ? "#e06666" : "#999999", o.id);

        const Table &table = scene.target ();
        if (plan)
        {
            for (const auto &s : plan->steps)
            {
                svg.polyline (s.fetch_leg.path, "path", "#3c78d8");
                svg.polyline (s.place_leg.path, "path", "#6aa84f");
                svg.pose (s.place.loc, "robot-pose", "#6aa84f", scene.robot.base_radius);
            }
        }
        auto draw_object = [&] (const std::string &name, Vec2 local) {
            const ObjectSpec &spec = scene.object (name);
            const Vec2 w = table.pose.to_world (local);
            svg.shape ({spec.footprint, {w.x, w.y, table.pose.theta}}, "object", "#ffffff", name);
        };
        if (plan)
            for (const auto &s : plan->steps)
                draw_object (s.object, s.target.position);
        else if (layout)
            for (const auto &name : layout->order)
                draw_object (name, layout->placements.at (name).position);
        svg.pose (scene.robot.start, "robot-start", "#f1c232", scene.robot.base_radius);
        return svg.finish ();
    }
} // namespace llmgrop
