#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

namespace llmgrop::detail
{
    // Disjoint-set forest with path halving and union by size.
    class UnionFind
    {
      public:
        explicit UnionFind (std::size_t n) : parent_ (n), size_ (n, 1) { std::iota (parent_.begin (), parent_.end (), 0); }

        std::size_t find (std::size_t x) noexcept
        {
            while (parent_[x] != x)
            {
                parent_[x] = parent_[parent_[x]];
                x = parent_[x];
            }
            return x;
        }

        bool unite (std::size_t a, std::size_t b) noexcept
        {
            a = find (a);
            b = find (b);
            if (a == b)
                return false;
            if (size_[a] < size_[b])
                std::swap (a, b);
            parent_[b] = a;
            size_[a] += size_[b];
            return true;
        }

        bool same (std::size_t a, std::size_t b) noexcept { return find (a) == find (b); }

      private:
        std::vector<std::size_t> parent_;
        std::vector<std::size_t> size_;
    };
} // namespace llmgrop::detail
