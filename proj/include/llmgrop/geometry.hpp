#pragma once
/**
 * @file
 * @brief Planar primitives: vectors, poses, footprints and the exact
 *        overlap / distance predicates used by the scene and the sampler.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <type_traits>
#include <variant>

namespace llmgrop
{
    /// Tolerance for boundary contact. Distances below this are treated as touching.
    inline constexpr double kGeomEps = 1e-9;

    struct Vec2
    {
        double x = 0.0;
        double y = 0.0;

        friend constexpr Vec2 operator+ (Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
        friend constexpr Vec2 operator- (Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
        friend constexpr Vec2 operator* (double s, Vec2 v) { return {s * v.x, s * v.y}; }
        friend constexpr bool operator== (Vec2 a, Vec2 b) = default;

        double norm () const { return std::hypot (x, y); }
        constexpr double dot (Vec2 o) const { return x * o.x + y * o.y; }
    };

    inline double distance (Vec2 a, Vec2 b) { return (a - b).norm (); }

    /// Rigid 2D pose; `theta` in radians, counter-clockwise.
    struct Pose2
    {
        double x = 0.0;
        double y = 0.0;
        double theta = 0.0;

        constexpr Vec2 position () const { return {x, y}; }

        Vec2 to_world (Vec2 local) const
        {
            const double c = std::cos (theta), s = std::sin (theta);
            return {x + c * local.x - s * local.y, y + s * local.x + c * local.y};
        }

        Vec2 to_local (Vec2 world) const
        {
            const double c = std::cos (theta), s = std::sin (theta);
            const Vec2 d = world - position ();
            return {c * d.x + s * d.y, -s * d.x + c * d.y};
        }

        friend constexpr bool operator== (const Pose2 &, const Pose2 &) = default;
    };

    /// Rectangle of width `w` along the local x axis and height `h` along local y.
    struct RectShape
    {
        double w = 0.0;
        double h = 0.0;
    };

    struct CircleShape
    {
        double radius = 0.0;
    };

    using Shape = std::variant<RectShape, CircleShape>;

    /// Largest dimension of a footprint (diameter or longer side).
    inline double extent (const Shape &shape)
    {
        return std::visit (
            [] (const auto &s) -> double {
                if constexpr (std::is_same_v<std::decay_t<decltype (s)>, RectShape>)
                    return std::max (s.w, s.h);
                else
                    return 2.0 * s.radius;
            },
            shape);
    }

    inline bool is_positive (const Shape &shape)
    {
        if (const auto *r = std::get_if<RectShape> (&shape))
            return r->w > 0.0 && r->h > 0.0;
        return std::get<CircleShape> (shape).radius > 0.0;
    }

    /// Perimeter of a footprint in meters.
    inline double perimeter (const Shape &shape)
    {
        if (const auto *r = std::get_if<RectShape> (&shape))
            return 2.0 * (r->w + r->h);
        return 2.0 * std::numbers::pi * std::get<CircleShape> (shape).radius;
    }

    struct Box
    {
        Vec2 min;
        Vec2 max;
    };

    /// A footprint at a pose.
    struct PlacedShape
    {
        Shape shape;
        Pose2 pose;
    };

    namespace detail
    {
        using Quad = std::array<Vec2, 4>;

        inline Quad corners (const RectShape &r, const Pose2 &pose)
        {
            const double hw = 0.5 * r.w, hh = 0.5 * r.h;
            return {pose.to_world ({-hw, -hh}), pose.to_world ({hw, -hh}), pose.to_world ({hw, hh}),
                    pose.to_world ({-hw, hh})};
        }

        inline Quad corners (const Box &b)
        {
            return {Vec2{b.min.x, b.min.y}, Vec2{b.max.x, b.min.y}, Vec2{b.max.x, b.max.y}, Vec2{b.min.x, b.max.y}};
        }

        inline double point_segment_distance (Vec2 p, Vec2 a, Vec2 b)
        {
            const Vec2 ab = b - a;
            const double len2 = ab.dot (ab);
            double t = len2 > 0.0 ? (p - a).dot (ab) / len2 : 0.0;
            t = std::clamp (t, 0.0, 1.0);
            return distance (p, a + t * ab);
        }

        /// Smallest gap between the projections of two quads over the edge normals of both.
        /// Positive: separated by that much along some axis. Negative: penetration depth.
        inline double max_separation (const Quad &a, const Quad &b)
        {
            double best = -std::numeric_limits<double>::infinity ();
            for (const Quad *q : {&a, &b})
            {
                for (std::size_t i = 0; i < 4; ++i)
                {
                    const Vec2 e = (*q)[(i + 1) % 4] - (*q)[i];
                    const double len = e.norm ();
                    if (len == 0.0)
                        continue;
                    const Vec2 n{-e.y / len, e.x / len};
                    double amin = std::numeric_limits<double>::infinity (), amax = -amin;
                    double bmin = amin, bmax = -amin;
                    for (const Vec2 &p : a)
                    {
                        amin = std::min (amin, n.dot (p));
                        amax = std::max (amax, n.dot (p));
                    }
                    for (const Vec2 &p : b)
                    {
                        bmin = std::min (bmin, n.dot (p));
                        bmax = std::max (bmax, n.dot (p));
                    }
                    best = std::max (best, std::max (bmin - amax, amin - bmax));
                }
            }
            return best;
        }

        inline double quad_distance (const Quad &a, const Quad &b)
        {
            if (max_separation (a, b) <= 0.0)
                return 0.0;
            double d = std::numeric_limits<double>::infinity ();
            for (std::size_t i = 0; i < 4; ++i)
                for (std::size_t j = 0; j < 4; ++j)
                {
                    d = std::min (d, point_segment_distance (a[i], b[j], b[(j + 1) % 4]));
                    d = std::min (d, point_segment_distance (b[j], a[i], a[(i + 1) % 4]));
                }
            return d;
        }

        /// Distance from a point to a rectangle (zero inside).
        inline double point_rect_distance (Vec2 p, const RectShape &r, const Pose2 &pose)
        {
            const Vec2 l = pose.to_local (p);
            const double dx = std::max (std::abs (l.x) - 0.5 * r.w, 0.0);
            const double dy = std::max (std::abs (l.y) - 0.5 * r.h, 0.0);
            return std::hypot (dx, dy);
        }

        inline double point_box_distance (Vec2 p, const Box &b)
        {
            const double dx = std::max ({b.min.x - p.x, 0.0, p.x - b.max.x});
            const double dy = std::max ({b.min.y - p.y, 0.0, p.y - b.max.y});
            return std::hypot (dx, dy);
        }
    } // namespace detail

    /**
     * @brief True iff the interiors of two placed footprints intersect.
     *        Boundary contact (flush edges, tangent circles) is not overlap.
     */
    inline bool footprints_overlap (const PlacedShape &a, const PlacedShape &b)
    {
        const auto *ca = std::get_if<CircleShape> (&a.shape);
        const auto *cb = std::get_if<CircleShape> (&b.shape);
        if (ca && cb)
            return distance (a.pose.position (), b.pose.position ()) < ca->radius + cb->radius - kGeomEps;
        if (ca)
            return detail::point_rect_distance (a.pose.position (), std::get<RectShape> (b.shape), b.pose) <
                   ca->radius - kGeomEps;
        if (cb)
            return detail::point_rect_distance (b.pose.position (), std::get<RectShape> (a.shape), a.pose) <
                   cb->radius - kGeomEps;
        const auto qa = detail::corners (std::get<RectShape> (a.shape), a.pose);
        const auto qb = detail::corners (std::get<RectShape> (b.shape), b.pose);
        return detail::max_separation (qa, qb) < -kGeomEps;
    }

    /// Euclidean distance between a placed footprint and an axis-aligned box (zero if they touch).
    inline double distance_to_box (const PlacedShape &s, const Box &box)
    {
        if (const auto *c = std::get_if<CircleShape> (&s.shape))
            return std::max (0.0, detail::point_box_distance (s.pose.position (), box) - c->radius);
        return detail::quad_distance (detail::corners (std::get<RectShape> (s.shape), s.pose), detail::corners (box));
    }

    /// Euclidean distance from a point to a placed footprint (zero inside).
    inline double distance_to_point (const PlacedShape &s, Vec2 p)
    {
        if (const auto *c = std::get_if<CircleShape> (&s.shape))
            return std::max (0.0, distance (p, s.pose.position ()) - c->radius);
        return detail::point_rect_distance (p, std::get<RectShape> (s.shape), s.pose);
    }

    /// Axis-aligned bounding box of a placed footprint grown by `margin`.
    inline Box bounding_box (const PlacedShape &s, double margin = 0.0)
    {
        Box b;
        if (const auto *c = std::get_if<CircleShape> (&s.shape))
        {
            const double r = c->radius + margin;
            b.min = {s.pose.x - r, s.pose.y - r};
            b.max = {s.pose.x + r, s.pose.y + r};
            return b;
        }
        const auto q = detail::corners (std::get<RectShape> (s.shape), s.pose);
        b.min = b.max = q[0];
        for (const Vec2 &p : q)
        {
            b.min = {std::min (b.min.x, p.x), std::min (b.min.y, p.y)};
            b.max = {std::max (b.max.x, p.x), std::max (b.max.y, p.y)};
        }
        b.min = {b.min.x - margin, b.min.y - margin};
        b.max = {b.max.x + margin, b.max.y + margin};
        return b;
    }

    /**
     * @brief True iff footprint `inner` (in the container's frame, axis-aligned) lies
     *        entirely within container shape `outer` centered at the origin.
     */
    inline bool contained_in (const Shape &outer, const Shape &inner, Vec2 at)
    {
        if (const auto *ro = std::get_if<RectShape> (&outer))
        {
            double hx, hy;
            if (const auto *ri = std::get_if<RectShape> (&inner))
                hx = 0.5 * ri->w, hy = 0.5 * ri->h;
            else
                hx = hy = std::get<CircleShape> (inner).radius;
            return std::abs (at.x) + hx <= 0.5 * ro->w + kGeomEps && std::abs (at.y) + hy <= 0.5 * ro->h + kGeomEps;
        }
        const double R = std::get<CircleShape> (outer).radius;
        if (const auto *ci = std::get_if<CircleShape> (&inner))
            return at.norm () + ci->radius <= R + kGeomEps;
        const auto &ri = std::get<RectShape> (inner);
        const double fx = std::abs (at.x) + 0.5 * ri.w, fy = std::abs (at.y) + 0.5 * ri.h;
        return std::hypot (fx, fy) <= R + kGeomEps;
    }
} // namespace llmgrop
