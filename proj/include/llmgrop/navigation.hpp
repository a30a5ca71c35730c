#pragma once
/**
 * @file
 * @brief Shortest paths on an 8-connected occupancy grid.
 *
 * Straight moves cost one cell, diagonal moves sqrt(2) cells; a diagonal move
 * is allowed only when both orthogonal neighbours are free (no corner
 * cutting). Path lengths are tracked as integer (straight, diagonal) move
 * counts so that two searches reaching the same optimum report bit-identical
 * lengths.
 */

#include <llmgrop/scene.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <vector>

namespace llmgrop
{
    struct MoveCount
    {
        std::uint32_t straight = 0;
        std::uint32_t diagonal = 0;

        /// Length in cells.
        double cells () const noexcept { return straight + diagonal * std::numbers::sqrt2; }
        double meters (double resolution) const noexcept { return cells () * resolution; }
        friend bool operator== (MoveCount, MoveCount) = default;
    };

    struct GridPath
    {
        MoveCount moves;
        std::vector<Cell> cells;  // from start to goal inclusive
    };

    namespace detail
    {
        struct Step
        {
            int dx, dy;
            bool diagonal;
        };

        inline constexpr std::array<Step, 8> kSteps{{{1, 0, false},
                                                      {-1, 0, false},
                                                      {0, 1, false},
                                                      {0, -1, false},
                                                      {1, 1, true},
                                                      {1, -1, true},
                                                      {-1, 1, true},
                                                      {-1, -1, true}}};

        inline bool can_move (const OccupancyGrid &g, Cell c, const Step &s)
        {
            const Cell n{c.x + s.dx, c.y + s.dy};
            if (g.occupied (n))
                return false;
            return !s.diagonal || (g.free ({c.x + s.dx, c.y}) && g.free ({c.x, c.y + s.dy}));
        }

        inline MoveCount advance (MoveCount m, const Step &s)
        {
            if (s.diagonal)
                ++m.diagonal;
            else
                ++m.straight;
            return m;
        }

        inline double octile (Cell a, Cell b)
        {
            const double dx = std::abs (a.x - b.x), dy = std::abs (a.y - b.y);
            return std::max (dx, dy) + (std::numbers::sqrt2 - 1.0) * std::min (dx, dy);
        }

        struct QueueEntry
        {
            double priority;
            std::size_t index;
            bool operator> (const QueueEntry &o) const noexcept
            {
                return priority > o.priority || (priority == o.priority && index > o.index);
            }
        };

        using MinQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

        inline std::vector<Cell> unwind (const OccupancyGrid &g, const std::vector<std::size_t> &parent, std::size_t from,
                                         std::size_t to)
        {
            std::vector<Cell> cells;
            for (std::size_t i = to;; i = parent[i])
            {
                cells.push_back (g.cell_at (i));
                if (i == from)
                    break;
            }
            std::reverse (cells.begin (), cells.end ());
            return cells;
        }
    } // namespace detail

    /**
     * @brief A* with the octile heuristic. Returns nullopt if `goal` is not
     *        reachable or either endpoint is occupied.
     */
    inline std::optional<GridPath> astar (const OccupancyGrid &grid, Cell start, Cell goal)
    {
        if (grid.occupied (start) || grid.occupied (goal))
            return std::nullopt;
        const std::size_t n = static_cast<std::size_t> (grid.width ()) * grid.height ();
        constexpr std::size_t none = std::numeric_limits<std::size_t>::max ();
        std::vector<MoveCount> g (n);
        std::vector<bool> known (n, false);
        std::vector<std::size_t> parent (n, none);
        const std::size_t s = grid.index (start), t = grid.index (goal);
        known[s] = true;
        parent[s] = s;
        detail::MinQueue open;
        open.push ({detail::octile (start, goal), s});
        while (!open.empty ())
        {
            const auto [prio, i] = open.top ();
            open.pop ();
            const Cell c = grid.cell_at (i);
            if (prio > g[i].cells () + detail::octile (c, goal))
                continue;  // stale
            if (i == t)
                return GridPath{g[t], detail::unwind (grid, parent, s, t)};
            for (const auto &step : detail::kSteps)
            {
                if (!detail::can_move (grid, c, step))
                    continue;
                const Cell nc{c.x + step.dx, c.y + step.dy};
                const std::size_t j = grid.index (nc);
                const MoveCount m = detail::advance (g[i], step);
                if (!known[j] || m.cells () < g[j].cells ())
                {
                    known[j] = true;
                    g[j] = m;
                    parent[j] = i;
                    open.push ({m.cells () + detail::octile (nc, goal), j});
                }
            }
        }
        return std::nullopt;
    }

    /// Single-source shortest path lengths to every cell (Dijkstra).
    class CostField
    {
      public:
        CostField (const OccupancyGrid &grid, Cell source) : grid_ (&grid), source_ (grid.index (source))
        {
            const std::size_t n = static_cast<std::size_t> (grid.width ()) * grid.height ();
            moves_.resize (n);
            known_.assign (n, false);
            parent_.assign (n, n);
            if (grid.occupied (source))
                return;
            known_[source_] = true;
            parent_[source_] = source_;
            detail::MinQueue open;
            open.push ({0.0, source_});
            while (!open.empty ())
            {
                const auto [d, i] = open.top ();
                open.pop ();
                if (d > moves_[i].cells ())
                    continue;
                const Cell c = grid.cell_at (i);
                for (const auto &step : detail::kSteps)
                {
                    if (!detail::can_move (grid, c, step))
                        continue;
                    const std::size_t j = grid.index ({c.x + step.dx, c.y + step.dy});
                    const MoveCount m = detail::advance (moves_[i], step);
                    if (!known_[j] || m.cells () < moves_[j].cells ())
                    {
                        known_[j] = true;
                        moves_[j] = m;
                        parent_[j] = i;
                        open.push ({m.cells (), j});
                    }
                }
            }
        }

        bool reachable (Cell c) const { return grid_->in_bounds (c) && known_[grid_->index (c)]; }

        std::optional<MoveCount> moves (Cell c) const
        {
            if (!reachable (c))
                return std::nullopt;
            return moves_[grid_->index (c)];
        }

        /// Path length in meters, +inf if unreachable.
        double meters (Cell c) const
        {
            const auto m = moves (c);
            return m ? m->meters (grid_->resolution ()) : std::numeric_limits<double>::infinity ();
        }

        /// Cells from `c` back to the source (paths are reversible on this graph).
        std::vector<Cell> path_from (Cell c) const
        {
            if (!reachable (c))
                return {};
            auto cells = detail::unwind (*grid_, parent_, source_, grid_->index (c));
            std::reverse (cells.begin (), cells.end ());
            return cells;
        }

        Cell source () const { return grid_->cell_at (source_); }

      private:
        const OccupancyGrid *grid_;
        std::size_t source_;
        std::vector<MoveCount> moves_;
        std::vector<bool> known_;
        std::vector<std::size_t> parent_;
    };
} // namespace llmgrop
