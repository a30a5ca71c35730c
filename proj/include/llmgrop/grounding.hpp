#pragma once
/**
 * @file
 * @brief Geometric grounding: anchor selection, nominal coordinates from
 *        recommended distances, and Gaussian rejection sampling of candidate
 *        tabletop configurations.
 *
 * All positions are in the target table's frame, in meters.
 */

#include <llmgrop/error.hpp>
#include <llmgrop/random.hpp>
#include <llmgrop/relations.hpp>
#include <llmgrop/scene.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace llmgrop
{
    struct Placement
    {
        Vec2 position;
        int stack_level = 0;

        friend bool operator== (const Placement &, const Placement &) = default;
    };

    struct NominalLayout
    {
        std::string anchor;
        std::map<std::string, Placement> positions;
    };

    struct SamplerParams
    {
        /// Covariance (xx, xy, yy) in m^2.
        std::array<double, 3> covariance{0.02 * 0.02, 0.0, 0.02 * 0.02};
        int max_tries_per_object = 100;
        /// Number of candidate configurations wanted (M).
        int candidates = 10;
        /// generate_candidates tries at most candidates * seed_budget_factor seeds.
        int seed_budget_factor = 10;
        /// Fixed equality band; unset uses default_band per pair.
        std::optional<double> band;
    };

    struct Configuration
    {
        std::map<std::string, Placement> placements;
        /// Placement order the sampler used (stack bases first).
        std::vector<std::string> order;
        std::uint64_t seed = 0;
        std::string anchor;
    };

    struct Rejected
    {
        std::string object;
        int tries = 0;
    };

    using SampleResult = std::variant<Configuration, Rejected>;

    inline const ObjectSpec &find_object (const std::vector<ObjectSpec> &objects, const std::string &name)
    {
        for (const auto &o : objects)
            if (o.name == name)
                return o;
        throw UnknownObject (name);
    }

    /// Equality band for a relation: the override if set, else half the larger footprint extent of the pair.
    inline double relation_band (const Relation &r, const std::vector<ObjectSpec> &objects, std::optional<double> fixed)
    {
        if (fixed)
            return *fixed;
        const Shape &s = find_object (objects, r.subject).footprint;
        if (r.kind == RelationKind::CenterOfTable)
            return 0.5 * extent (s);
        return default_band (s, find_object (objects, r.anchor).footprint);
    }

    /**
     * @brief Origin object: the one placed in the center of the table if any,
     *        otherwise the object with most relations (ties lexicographic).
     */
    inline std::string select_anchor (const RelationSet &rs)
    {
        if (rs.empty ())
            throw EmptyRelationSet ();
        for (const auto &r : rs.relations ())
            if (r.kind == RelationKind::CenterOfTable)
                return r.subject;
        std::map<std::string, int> degree;
        for (const auto &r : rs.relations ())
        {
            ++degree[r.subject];
            ++degree[r.anchor];
        }
        std::string best;
        int best_degree = -1;
        for (const auto &[name, d] : degree)
            if (d > best_degree)
                best = name, best_degree = d;
        return best;
    }

    /// Offset of the subject from the anchor for a relation kind at distance `d` meters.
    inline Vec2 relation_offset (RelationKind k, double d)
    {
        const double s = d / std::numbers::sqrt2;
        switch (k)
        {
        case RelationKind::LeftOf: return {-d, 0.0};
        case RelationKind::RightOf: return {d, 0.0};
        case RelationKind::Above: return {0.0, d};
        case RelationKind::Below: return {0.0, -d};
        case RelationKind::AboveLeft: return {-s, s};
        case RelationKind::AboveRight: return {s, s};
        case RelationKind::BelowLeft: return {-s, -s};
        case RelationKind::BelowRight: return {s, -s};
        case RelationKind::OnTopOf:
        case RelationKind::CenterOfTable: return {};
        }
        return {};
    }

    /// Stack level per object: 0 on the table, base level + 1 when resting on another object.
    inline std::map<std::string, int> stack_levels (const RelationSet &rs)
    {
        std::map<std::string, int> level;
        for (const auto &name : placement_order (rs))
        {
            int l = 0;
            for (const auto &r : rs.relations ())
                if (r.kind == RelationKind::OnTopOf && r.subject == name)
                    l = std::max (l, level[r.anchor] + 1);
            level[name] = l;
        }
        return level;
    }

    /**
     * @brief Propagate recommended distances breadth-first from the anchor.
     *
     * Each object is positioned once, by the first relation that reaches it;
     * remaining relations are left for validation. Distances are in centimeters.
     */
    inline NominalLayout nominal_positions (const RelationSet &rs, const std::map<Relation, double> &distances_cm,
                                            const std::string &anchor)
    {
        if (rs.empty ())
            throw EmptyRelationSet ();
        NominalLayout out;
        out.anchor = anchor;
        std::map<std::string, Vec2> pos;
        std::deque<std::string> queue;
        pos[anchor] = {};
        queue.push_back (anchor);
        for (const auto &r : rs.relations ())
            if (r.kind == RelationKind::CenterOfTable && !pos.count (r.subject))
            {
                pos[r.subject] = {};
                queue.push_back (r.subject);
            }

        const auto &rels = rs.relations ();
        while (!queue.empty ())
        {
            const std::string n = queue.front ();
            queue.pop_front ();
            for (const auto &r : rels)
            {
                if (r.kind == RelationKind::CenterOfTable || (r.subject != n && r.anchor != n))
                    continue;
                const bool forward = r.anchor == n;
                const std::string &other = forward ? r.subject : r.anchor;
                if (pos.count (other))
                    continue;
                Vec2 offset;
                if (r.kind != RelationKind::OnTopOf)
                {
                    const auto it = distances_cm.find (r);
                    if (it == distances_cm.end ())
                        throw MissingDistance ("no distance for " + describe (r));
                    offset = relation_offset (r.kind, it->second / 100.0);
                }
                pos[other] = forward ? pos[n] + offset : pos[n] - offset;
                queue.push_back (other);
            }
        }
        for (const auto &name : rs.objects ())
            if (!pos.count (name))
                throw Disconnected (name);
        const auto levels = stack_levels (rs);
        for (const auto &[name, p] : pos)
            out.positions[name] = {p, levels.count (name) ? levels.at (name) : 0};
        return out;
    }

    namespace detail
    {
        struct Cholesky2
        {
            double a, b, c;  // [[a, 0], [b, c]]
        };

        inline Cholesky2 cholesky (const std::array<double, 3> &cov)
        {
            if (!(cov[0] > 0.0))
                throw Error ("covariance must be positive-definite");
            const double a = std::sqrt (cov[0]);
            const double b = cov[1] / a;
            const double rem = cov[2] - b * b;
            if (!(rem > 0.0))
                throw Error ("covariance must be positive-definite");
            return {a, b, std::sqrt (rem)};
        }

        inline const Relation *stack_base_relation (const RelationSet &rs, const std::string &name)
        {
            for (const auto &r : rs.relations ())
                if (r.kind == RelationKind::OnTopOf && r.subject == name)
                    return &r;
            return nullptr;
        }
    } // namespace detail

    /**
     * @brief Draw one configuration by sequential Gaussian rejection sampling.
     *
     * Objects are drawn in placement order around their nominal positions. A
     * draw is accepted only if (a) every relation to already-placed objects
     * (and to the table center) holds within the equality band, (b) it does not
     * overlap an already-placed object on the same stack level, and (c) its
     * footprint lies inside the table. Stacked objects copy their base's
     * accepted position.
     */
    inline SampleResult sample_configuration (const NominalLayout &nominal, const RelationSet &rs, const Table &table,
                                              const std::vector<ObjectSpec> &objects, const SamplerParams &params,
                                              std::uint64_t seed)
    {
        const auto L = detail::cholesky (params.covariance);
        Rng rng = make_rng (seed);
        std::normal_distribution<double> normal (0.0, 1.0);

        Configuration cfg;
        cfg.seed = seed;
        cfg.anchor = nominal.anchor;
        for (const auto &name : placement_order (rs))
            if (nominal.positions.count (name))
                cfg.order.push_back (name);

        auto accept = [&] (const std::string &name, Vec2 p, int level) {
            const ObjectSpec &spec = find_object (objects, name);
            if (!contained_in (table.shape, spec.footprint, p))
                return false;
            for (const auto &[other, pl] : cfg.placements)
                if (pl.stack_level == level && footprints_overlap (spec, p, find_object (objects, other), pl.position))
                    return false;
            for (const auto &r : rs.relations ())
            {
                if (r.kind == RelationKind::CenterOfTable)
                {
                    if (r.subject == name && !satisfied (r, p, {}, relation_band (r, objects, params.band)))
                        return false;
                    continue;
                }
                const bool as_subject = r.subject == name && cfg.placements.count (r.anchor);
                const bool as_anchor = r.anchor == name && cfg.placements.count (r.subject);
                if (!as_subject && !as_anchor)
                    continue;
                const Vec2 s = as_subject ? p : cfg.placements.at (r.subject).position;
                const Vec2 a = as_subject ? cfg.placements.at (r.anchor).position : p;
                if (!satisfied (r, s, a, relation_band (r, objects, params.band)))
                    return false;
            }
            return true;
        };

        for (const auto &name : cfg.order)
        {
            const Placement &nom = nominal.positions.at (name);
            if (const Relation *base = detail::stack_base_relation (rs, name))
            {
                if (!find_object (objects, base->anchor).stack_base)
                    throw IllegalStacking (name + " cannot rest on " + base->anchor);
                const Vec2 p = cfg.placements.at (base->anchor).position;
                if (!accept (name, p, nom.stack_level))
                    return Rejected{name, 1};
                cfg.placements[name] = {p, nom.stack_level};
                continue;
            }
            bool placed = false;
            for (int t = 0; t < params.max_tries_per_object && !placed; ++t)
            {
                const double z1 = normal (rng), z2 = normal (rng);
                const Vec2 p = nom.position + Vec2{L.a * z1, L.b * z1 + L.c * z2};
                if (accept (name, p, nom.stack_level))
                {
                    cfg.placements[name] = {p, nom.stack_level};
                    placed = true;
                }
            }
            if (!placed)
                return Rejected{name, params.max_tries_per_object};
        }
        return cfg;
    }

    /**
     * @brief Up to M accepted configurations from seeds base_seed, base_seed+1, ...
     * @throws NoValidConfiguration if the seed budget yields none.
     */
    inline std::vector<Configuration> generate_candidates (const NominalLayout &nominal, const RelationSet &rs,
                                                           const Table &table, const std::vector<ObjectSpec> &objects,
                                                           const SamplerParams &params, std::uint64_t base_seed)
    {
        if (params.candidates < 1)
            throw Error ("number of candidates must be at least 1");
        std::vector<Configuration> out;
        const long budget = static_cast<long> (params.candidates) * std::max (1, params.seed_budget_factor);
        std::optional<Rejected> last;
        for (long k = 0; k < budget && static_cast<int> (out.size ()) < params.candidates; ++k)
        {
            SampleResult r = sample_configuration (nominal, rs, table, objects, params, base_seed + static_cast<std::uint64_t> (k));
            if (auto *c = std::get_if<Configuration> (&r))
                out.push_back (std::move (*c));
            else
                last = std::get<Rejected> (r);
        }
        if (out.empty ())
            throw NoValidConfiguration ("no configuration accepted within " + std::to_string (budget) + " seeds" +
                                        (last ? " (last rejection: " + last->object + ")" : std::string{}));
        return out;
    }

    /**
     * @brief Problems with a configuration: unsatisfied relations, same-level
     *        overlaps, out-of-bounds footprints. Empty when valid.
     */
    inline std::vector<std::string> validate_configuration (const Configuration &cfg, const RelationSet &rs, const Table &table,
                                                            const std::vector<ObjectSpec> &objects,
                                                            std::optional<double> band = std::nullopt)
    {
        std::vector<std::string> problems;
        for (const auto &[name, p] : cfg.placements)
            if (!contained_in (table.shape, find_object (objects, name).footprint, p.position))
                problems.push_back ("out of bounds: " + name);
        for (auto i = cfg.placements.begin (); i != cfg.placements.end (); ++i)
            for (auto j = std::next (i); j != cfg.placements.end (); ++j)
                if (i->second.stack_level == j->second.stack_level &&
                    footprints_overlap (find_object (objects, i->first), i->second.position, find_object (objects, j->first),
                                        j->second.position))
                    problems.push_back ("overlap: " + i->first + " / " + j->first);
        for (const auto &r : rs.relations ())
        {
            if (!cfg.placements.count (r.subject) || (!r.anchor.empty () && !cfg.placements.count (r.anchor)))
            {
                problems.push_back ("missing object for: " + describe (r));
                continue;
            }
            const Vec2 a = r.anchor.empty () ? Vec2{} : cfg.placements.at (r.anchor).position;
            if (!satisfied (r, cfg.placements.at (r.subject).position, a, relation_band (r, objects, band)))
                problems.push_back ("unsatisfied: " + describe (r));
        }
        return problems;
    }

    inline nlohmann::json configuration_to_json (const Configuration &cfg)
    {
        nlohmann::json records = nlohmann::json::array ();
        for (const auto &name : cfg.order)
        {
            const Placement &p = cfg.placements.at (name);
            records.push_back ({{"object", name}, {"x", p.position.x}, {"y", p.position.y}, {"stack_level", p.stack_level}});
        }
        return records;
    }

    /// Records in order; the record order becomes the placement order.
    inline Configuration configuration_from_json (const nlohmann::json &records)
    {
        Configuration cfg;
        for (const auto &r : records)
        {
            const std::string name = r.at ("object").get<std::string> ();
            cfg.order.push_back (name);
            cfg.placements[name] = {{r.at ("x").get<double> (), r.at ("y").get<double> ()}, r.value ("stack_level", 0)};
        }
        return cfg;
    }
} // namespace llmgrop
