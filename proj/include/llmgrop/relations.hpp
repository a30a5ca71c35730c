#pragma once
/**
 * @file
 * @brief Qualitative spatial relations between tabletop objects.
 *
 * Every relation kind decomposes into independent per-axis constraints
 * (strict order or equality on x and y, plus a stacking order). Consistency
 * of a relation set is decided per axis: equalities are merged with a
 * union-find, strict orders become edges between the resulting classes, and
 * the set is consistent iff no axis has a self-loop or a cycle.
 */

#include <llmgrop/detail/union_find.hpp>
#include <llmgrop/error.hpp>
#include <llmgrop/geometry.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace llmgrop
{
    enum class RelationKind
    {
        LeftOf,
        RightOf,
        Above,
        Below,
        AboveLeft,
        AboveRight,
        BelowLeft,
        BelowRight,
        OnTopOf,
        CenterOfTable
    };

    inline constexpr std::array<RelationKind, 10> kAllRelationKinds = {
        RelationKind::LeftOf,    RelationKind::RightOf,    RelationKind::Above,     RelationKind::Below,
        RelationKind::AboveLeft, RelationKind::AboveRight, RelationKind::BelowLeft, RelationKind::BelowRight,
        RelationKind::OnTopOf,   RelationKind::CenterOfTable};

    inline std::string_view to_string (RelationKind k)
    {
        switch (k)
        {
        case RelationKind::LeftOf: return "LeftOf";
        case RelationKind::RightOf: return "RightOf";
        case RelationKind::Above: return "Above";
        case RelationKind::Below: return "Below";
        case RelationKind::AboveLeft: return "AboveLeft";
        case RelationKind::AboveRight: return "AboveRight";
        case RelationKind::BelowLeft: return "BelowLeft";
        case RelationKind::BelowRight: return "BelowRight";
        case RelationKind::OnTopOf: return "OnTopOf";
        case RelationKind::CenterOfTable: return "CenterOfTable";
        }
        return "?";
    }

    inline std::optional<RelationKind> relation_kind_from_string (std::string_view s)
    {
        for (RelationKind k : kAllRelationKinds)
            if (to_string (k) == s)
                return k;
        return std::nullopt;
    }

    /// English phrase used in prompts and Place-lines ("to the left of", ...).
    inline std::string_view phrase (RelationKind k)
    {
        switch (k)
        {
        case RelationKind::LeftOf: return "to the left of";
        case RelationKind::RightOf: return "to the right of";
        case RelationKind::Above: return "above";
        case RelationKind::Below: return "below";
        case RelationKind::AboveLeft: return "above and to the left of";
        case RelationKind::AboveRight: return "above and to the right of";
        case RelationKind::BelowLeft: return "below and to the left of";
        case RelationKind::BelowRight: return "below and to the right of";
        case RelationKind::OnTopOf: return "on top of";
        case RelationKind::CenterOfTable: return "in the center of table";
        }
        return "?";
    }

    struct Relation
    {
        std::string subject;
        RelationKind kind = RelationKind::LeftOf;
        /// Empty for CenterOfTable, whose anchor is the table itself.
        std::string anchor;

        friend bool operator== (const Relation &, const Relation &) = default;
        friend auto operator<=> (const Relation &, const Relation &) = default;
    };

    inline std::string describe (const Relation &r)
    {
        if (r.kind == RelationKind::CenterOfTable)
            return r.subject + " " + std::string (phrase (r.kind));
        return r.subject + " " + std::string (phrase (r.kind)) + " " + r.anchor;
    }

    /// Order of the subject's coordinate relative to the anchor's.
    enum class Order
    {
        Less,
        Equal,
        Greater
    };

    enum class Axis
    {
        X,
        Y,
        Stack
    };

    inline std::string_view to_string (Axis a)
    {
        switch (a)
        {
        case Axis::X: return "x-axis";
        case Axis::Y: return "y-axis";
        case Axis::Stack: return "stacking";
        }
        return "?";
    }

    struct AxisConstraints
    {
        Order x = Order::Equal;
        Order y = Order::Equal;
        /// Subject rests on the anchor.
        bool stacked = false;
        /// The anchor is the table-frame origin rather than an object.
        bool table_anchored = false;

        friend bool operator== (const AxisConstraints &, const AxisConstraints &) = default;
    };

    inline AxisConstraints decompose (RelationKind k)
    {
        using enum Order;
        switch (k)
        {
        case RelationKind::LeftOf: return {Less, Equal};
        case RelationKind::RightOf: return {Greater, Equal};
        case RelationKind::Above: return {Equal, Greater};
        case RelationKind::Below: return {Equal, Less};
        case RelationKind::AboveLeft: return {Less, Greater};
        case RelationKind::AboveRight: return {Greater, Greater};
        case RelationKind::BelowLeft: return {Less, Less};
        case RelationKind::BelowRight: return {Greater, Less};
        case RelationKind::OnTopOf: return {Equal, Equal, true, false};
        case RelationKind::CenterOfTable: return {Equal, Equal, false, true};
        }
        return {};
    }

    inline AxisConstraints decompose (const Relation &r) { return decompose (r.kind); }

    inline void check_well_formed (const Relation &r)
    {
        if (r.subject.empty ())
            throw InvalidRelation ("relation has an empty subject");
        if (r.kind == RelationKind::CenterOfTable)
        {
            if (!r.anchor.empty ())
                throw InvalidRelation ("CenterOfTable takes no anchor: " + describe (r));
            return;
        }
        if (r.anchor.empty ())
            throw InvalidRelation ("relation needs an anchor: " + r.subject + " " + std::string (to_string (r.kind)));
        if (r.subject == r.anchor)
            throw InvalidRelation ("subject equals anchor: " + describe (r));
    }

    /**
     * @brief Relations over a universe of named objects. A consistent set holds
     *        at most one distinct relation per ordered (subject, anchor) pair.
     */
    class RelationSet
    {
      public:
        RelationSet () = default;

        /// Universe = every name the relations mention.
        explicit RelationSet (std::vector<Relation> relations)
        {
            for (auto &r : relations)
                add (std::move (r));
        }

        /// Explicit universe. Relations may still mention names outside it;
        /// check_consistency reports those as UnknownObject.
        RelationSet (std::vector<Relation> relations, const std::vector<std::string> &objects)
            : explicit_universe_ (true)
        {
            objects_.insert (objects.begin (), objects.end ());
            for (auto &r : relations)
                add (std::move (r));
        }

        void add (Relation r)
        {
            // Two distinct kinds on one ordered pair always clash on some axis, so
            // such sets are accepted here and rejected by check_consistency.
            check_well_formed (r);
            if (!explicit_universe_)
            {
                objects_.insert (r.subject);
                if (!r.anchor.empty ())
                    objects_.insert (r.anchor);
            }
            relations_.push_back (std::move (r));
        }

        const std::vector<Relation> &relations () const noexcept { return relations_; }
        const std::set<std::string> &objects () const noexcept { return objects_; }
        std::size_t size () const noexcept { return relations_.size (); }
        bool empty () const noexcept { return relations_.empty (); }
        bool contains (const std::string &name) const { return objects_.count (name) > 0; }

        friend bool operator== (const RelationSet &, const RelationSet &) = default;

      private:
        std::vector<Relation> relations_;
        std::set<std::string> objects_;
        bool explicit_universe_ = false;
    };

    struct Conflict
    {
        Axis axis = Axis::X;
        /// Zero-based indices of the contributing relations, ascending.
        std::vector<std::size_t> relation_indices;
        std::vector<Relation> relations;
        std::string explanation;
    };

    struct ConsistencyVerdict
    {
        bool consistent = true;
        std::optional<Conflict> conflict;

        explicit operator bool () const noexcept { return consistent; }
    };

    namespace detail
    {
        struct OrderEdge
        {
            std::size_t from;  // strictly smaller node
            std::size_t to;    // strictly larger node
            std::size_t relation;
        };

        struct EqEdge
        {
            std::size_t other;
            std::size_t relation;
        };

        /// Relation indices along some equality path u ~ v (empty when u == v).
        inline std::vector<std::size_t> equality_path (const std::vector<std::vector<EqEdge>> &adj, std::size_t u,
                                                       std::size_t v)
        {
            if (u == v)
                return {};
            std::vector<std::optional<std::pair<std::size_t, std::size_t>>> prev (adj.size ());
            std::vector<bool> seen (adj.size (), false);
            std::deque<std::size_t> queue{u};
            seen[u] = true;
            while (!queue.empty ())
            {
                const std::size_t n = queue.front ();
                queue.pop_front ();
                if (n == v)
                    break;
                for (const auto &e : adj[n])
                    if (!seen[e.other])
                    {
                        seen[e.other] = true;
                        prev[e.other] = std::pair{n, e.relation};
                        queue.push_back (e.other);
                    }
            }
            std::vector<std::size_t> out;
            for (std::size_t n = v; n != u && prev[n]; n = prev[n]->first)
                out.push_back (prev[n]->second);
            return out;
        }

        /// Finds a directed cycle; returns the edge indices along it in traversal order.
        inline std::optional<std::vector<std::size_t>> find_cycle (std::size_t nodes,
                                                                   const std::vector<std::pair<std::size_t, std::size_t>> &edges)
        {
            std::vector<std::vector<std::size_t>> out (nodes);
            for (std::size_t i = 0; i < edges.size (); ++i)
                out[edges[i].first].push_back (i);
            enum : char { White, Grey, Black };
            std::vector<char> color (nodes, White);
            std::vector<std::size_t> via (nodes, 0);  // edge used to enter a node
            for (std::size_t root = 0; root < nodes; ++root)
            {
                if (color[root] != White)
                    continue;
                std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
                color[root] = Grey;
                while (!stack.empty ())
                {
                    auto &[n, next] = stack.back ();
                    if (next == out[n].size ())
                    {
                        color[n] = Black;
                        stack.pop_back ();
                        continue;
                    }
                    const std::size_t e = out[n][next++];
                    const std::size_t m = edges[e].second;
                    if (color[m] == Grey)
                    {
                        std::vector<std::size_t> cycle{e};
                        for (std::size_t k = n; k != m; k = edges[via[k]].first)
                            cycle.push_back (via[k]);
                        std::reverse (cycle.begin (), cycle.end ());
                        return cycle;
                    }
                    if (color[m] == White)
                    {
                        color[m] = Grey;
                        via[m] = e;
                        stack.push_back ({m, 0});
                    }
                }
            }
            return std::nullopt;
        }

        inline Conflict make_conflict (Axis axis, const RelationSet &rs, std::vector<std::size_t> strict,
                                       std::vector<std::size_t> equal)
        {
            Conflict c;
            c.axis = axis;
            auto list = [&rs] (const std::vector<std::size_t> &idx) {
                std::string s;
                for (std::size_t i = 0; i < idx.size (); ++i)
                {
                    if (i)
                        s += ", ";
                    s += "#" + std::to_string (idx[i] + 1) + " (" + describe (rs.relations ()[idx[i]]) + ")";
                }
                return s;
            };
            std::sort (strict.begin (), strict.end ());
            strict.erase (std::unique (strict.begin (), strict.end ()), strict.end ());
            std::sort (equal.begin (), equal.end ());
            equal.erase (std::unique (equal.begin (), equal.end ()), equal.end ());
            if (axis == Axis::Stack)
                c.explanation = "stacking conflict: cyclic on-top-of chain " + list (strict);
            else if (strict.size () == 1)
                c.explanation = std::string (to_string (axis)) + " conflict: strict order " + list (strict) +
                                " contradicts the equality implied by " + list (equal);
            else
            {
                c.explanation = std::string (to_string (axis)) + " conflict: cyclic strict order " + list (strict);
                if (!equal.empty ())
                    c.explanation += " through equalities " + list (equal);
            }
            std::merge (strict.begin (), strict.end (), equal.begin (), equal.end (),
                        std::back_inserter (c.relation_indices));
            c.relation_indices.erase (std::unique (c.relation_indices.begin (), c.relation_indices.end ()),
                                      c.relation_indices.end ());
            for (std::size_t i : c.relation_indices)
                c.relations.push_back (rs.relations ()[i]);
            return c;
        }

        inline std::optional<Conflict> check_axis (Axis axis, const RelationSet &rs,
                                                   const std::map<std::string, std::size_t> &index, std::size_t table_node)
        {
            const std::size_t n = table_node + 1;
            UnionFind uf (n);
            std::vector<std::vector<EqEdge>> eq (n);
            std::vector<OrderEdge> strict;
            const auto &rels = rs.relations ();
            for (std::size_t i = 0; i < rels.size (); ++i)
            {
                const AxisConstraints ac = decompose (rels[i]);
                const std::size_t s = index.at (rels[i].subject);
                const std::size_t a = ac.table_anchored ? table_node : index.at (rels[i].anchor);
                const Order o = axis == Axis::X ? ac.x : ac.y;
                if (o == Order::Equal)
                {
                    uf.unite (s, a);
                    eq[s].push_back ({a, i});
                    eq[a].push_back ({s, i});
                }
                else if (o == Order::Less)
                    strict.push_back ({s, a, i});
                else
                    strict.push_back ({a, s, i});
            }
            for (const auto &e : strict)
                if (uf.same (e.from, e.to))
                    return make_conflict (axis, rs, {e.relation}, equality_path (eq, e.to, e.from));

            std::vector<std::pair<std::size_t, std::size_t>> class_edges;
            for (const auto &e : strict)
                class_edges.emplace_back (uf.find (e.from), uf.find (e.to));
            const auto cycle = find_cycle (n, class_edges);
            if (!cycle)
                return std::nullopt;
            std::vector<std::size_t> strict_rel, equal_rel;
            for (std::size_t k = 0; k < cycle->size (); ++k)
            {
                const OrderEdge &cur = strict[(*cycle)[k]];
                const OrderEdge &next = strict[(*cycle)[(k + 1) % cycle->size ()]];
                strict_rel.push_back (cur.relation);
                const auto path = equality_path (eq, cur.to, next.from);
                equal_rel.insert (equal_rel.end (), path.begin (), path.end ());
            }
            return make_conflict (axis, rs, strict_rel, equal_rel);
        }
    } // namespace detail

    /**
     * @brief Decide whether some placement satisfies every relation exactly.
     *
     * Equality constraints are merged per axis with a union-find; strict orders
     * become edges between the equivalence classes. The set is consistent iff no
     * strict edge joins a class to itself, the class graph is acyclic on both
     * axes, and the on-top-of graph is acyclic.
     *
     * @throws UnknownObject if a relation mentions a name outside `rs.objects()`.
     */
    inline ConsistencyVerdict check_consistency (const RelationSet &rs)
    {
        std::map<std::string, std::size_t> index;
        for (const auto &name : rs.objects ())
            index.emplace (name, index.size ());
        for (const auto &r : rs.relations ())
        {
            if (!index.count (r.subject))
                throw UnknownObject (r.subject);
            if (!r.anchor.empty () && !index.count (r.anchor))
                throw UnknownObject (r.anchor);
        }
        const std::size_t table_node = index.size ();

        for (Axis axis : {Axis::X, Axis::Y})
            if (auto c = detail::check_axis (axis, rs, index, table_node))
                return {false, std::move (c)};

        std::vector<std::pair<std::size_t, std::size_t>> stack_edges;
        std::vector<std::size_t> stack_rel;
        const auto &rels = rs.relations ();
        for (std::size_t i = 0; i < rels.size (); ++i)
            if (rels[i].kind == RelationKind::OnTopOf)
            {
                stack_edges.emplace_back (index.at (rels[i].anchor), index.at (rels[i].subject));
                stack_rel.push_back (i);
            }
        if (const auto cycle = detail::find_cycle (table_node, stack_edges))
        {
            std::vector<std::size_t> members;
            for (std::size_t e : *cycle)
                members.push_back (stack_rel[e]);
            return {false, detail::make_conflict (Axis::Stack, rs, members, {})};
        }
        return {true, std::nullopt};
    }

    /**
     * @brief Order in which objects must be placed: every stack base before the
     *        objects resting on it, otherwise lexicographic.
     * @throws CyclicStacking if the on-top-of graph has a cycle.
     */
    inline std::vector<std::string> placement_order (const RelationSet &rs)
    {
        std::map<std::string, std::vector<std::string>> above;
        std::map<std::string, int> indegree;
        for (const auto &name : rs.objects ())
            indegree[name] = 0;
        for (const auto &r : rs.relations ())
            if (r.kind == RelationKind::OnTopOf)
            {
                above[r.anchor].push_back (r.subject);
                ++indegree[r.subject];
                indegree.try_emplace (r.anchor, 0);
            }
        std::set<std::string> ready;
        for (const auto &[name, d] : indegree)
            if (d == 0)
                ready.insert (name);
        std::vector<std::string> order;
        while (!ready.empty ())
        {
            const std::string next = *ready.begin ();
            ready.erase (ready.begin ());
            order.push_back (next);
            for (const auto &s : above[next])
                if (--indegree[s] == 0)
                    ready.insert (s);
        }
        if (order.size () != indegree.size ())
            throw CyclicStacking ("on-top-of relations form a cycle");
        return order;
    }

    /// Default equality band for a pair: half the larger footprint extent.
    inline double default_band (const Shape &a, const Shape &b) { return 0.5 * std::max (extent (a), extent (b)); }

    /**
     * @brief Geometric test of one relation between two table-frame positions.
     *
     * Strict-order axes need a strict inequality; equality axes hold within
     * `band`. For CenterOfTable pass the table origin as `anchor`.
     */
    inline bool satisfied (const Relation &r, Vec2 subject, Vec2 anchor, double band)
    {
        const AxisConstraints ac = decompose (r);
        auto holds = [band] (Order o, double s, double a) {
            switch (o)
            {
            case Order::Less: return s < a;
            case Order::Greater: return s > a;
            case Order::Equal: return std::abs (s - a) <= band;
            }
            return false;
        };
        return holds (ac.x, subject.x, anchor.x) && holds (ac.y, subject.y, anchor.y);
    }

    // JSON-lines serialization: one {"subject","kind","anchor"} object per line.

    inline nlohmann::json relation_to_json (const Relation &r)
    {
        nlohmann::json j{{"subject", r.subject}, {"kind", std::string (to_string (r.kind))}};
        if (!r.anchor.empty ())
            j["anchor"] = r.anchor;
        return j;
    }

    inline Relation relation_from_json (const nlohmann::json &j)
    {
        Relation r;
        r.subject = j.at ("subject").get<std::string> ();
        const std::string kind = j.at ("kind").get<std::string> ();
        const auto k = relation_kind_from_string (kind);
        if (!k)
            throw InvalidRelation ("unknown relation kind: " + kind);
        r.kind = *k;
        r.anchor = j.value ("anchor", std::string{});
        return r;
    }

    inline std::string to_json_lines (const RelationSet &rs)
    {
        std::string out;
        for (const auto &r : rs.relations ())
            out += relation_to_json (r).dump () + "\n";
        return out;
    }

    inline RelationSet parse_json_lines (const std::string &text)
    {
        RelationSet rs;
        std::istringstream in (text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline (in, line))
        {
            ++lineno;
            if (line.find_first_not_of (" \t\r") == std::string::npos)
                continue;
            try
            {
                rs.add (relation_from_json (nlohmann::json::parse (line)));
            }
            catch (const nlohmann::json::exception &e)
            {
                throw InvalidRelation ("line " + std::to_string (lineno) + ": " + e.what ());
            }
            catch (const InvalidRelation &e)
            {
                throw InvalidRelation ("line " + std::to_string (lineno) + ": " + e.what ());
            }
        }
        return rs;
    }
} // namespace llmgrop
