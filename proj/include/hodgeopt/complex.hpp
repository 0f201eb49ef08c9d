/**
 * Oriented simplices and simplicial complexes closed under taking faces.
 *
 * Simplices are stored with their vertices sorted ascending, and that
 * ascending ordering is the reference orientation of every simplex. Within
 * each order the simplices are indexed lexicographically by vertex tuple, so
 * identical inputs always give identical indices.
 */
#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hodgeopt/diagnostics.hpp"

namespace hodgeopt {

using Vertex = std::uint32_t;

class Simplex {
public:
    Simplex() = default;

    /// Sorts the vertices; rejects repeated vertices and empty sets.
    explicit Simplex(std::vector<Vertex> vertices) : vertices_(std::move(vertices))
    {
        if (vertices_.empty()) throw ValidationError("simplex must have at least one vertex");
        std::sort(vertices_.begin(), vertices_.end());
        auto dup = std::adjacent_find(vertices_.begin(), vertices_.end());
        if (dup != vertices_.end()) {
            std::ostringstream os;
            os << "simplex has repeated vertex " << *dup;
            throw ValidationError(os.str());
        }
    }

    Simplex(std::initializer_list<Vertex> vertices) : Simplex(std::vector<Vertex>(vertices)) {}

    int order() const { return static_cast<int>(vertices_.size()) - 1; }
    const std::vector<Vertex>& vertices() const { return vertices_; }
    Vertex operator[](std::size_t i) const { return vertices_[i]; }

    /// Face obtained by deleting the vertex at position `pos` of the ascending ordering.
    Simplex face(std::size_t pos) const
    {
        Simplex f;
        f.vertices_.reserve(vertices_.size() - 1);
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            if (i != pos) f.vertices_.push_back(vertices_[i]);
        return f;
    }

    /// Orientation sign of face(pos) inside this simplex: (-1)^pos.
    static int face_sign(std::size_t pos) { return (pos % 2 == 0) ? 1 : -1; }

    std::string to_string() const
    {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < vertices_.size(); ++i) os << (i ? "," : "") << vertices_[i];
        os << ']';
        return os.str();
    }

    auto operator<=>(const Simplex&) const = default;
    bool operator==(const Simplex&) const = default;

private:
    std::vector<Vertex> vertices_;
};

class SimplicialComplex {
public:
    SimplicialComplex() = default;

    /// `by_order[k]` must already be closed under faces, sorted and free of duplicates.
    /// Prefer build_complex(), which establishes those invariants.
    explicit SimplicialComplex(std::vector<std::vector<Simplex>> by_order)
        : simplices_(std::move(by_order))
    {
        while (!simplices_.empty() && simplices_.back().empty()) simplices_.pop_back();
        index_.resize(simplices_.size());
        for (std::size_t k = 0; k < simplices_.size(); ++k) {
            for (std::size_t i = 0; i < simplices_[k].size(); ++i) {
                const Simplex& s = simplices_[k][i];
                if (s.order() != static_cast<int>(k))
                    throw ValidationError("simplex " + s.to_string() + " stored at wrong order");
                if (i > 0 && !(simplices_[k][i - 1] < s))
                    throw ValidationError("simplices of order " + std::to_string(k) +
                                          " are not strictly lexicographic");
                index_[k].emplace(s, i);
            }
        }
        for (std::size_t k = 1; k < simplices_.size(); ++k)
            for (const Simplex& s : simplices_[k])
                for (std::size_t pos = 0; pos <= k; ++pos)
                    if (!contains(s.face(pos)))
                        throw ValidationError("complex is not closed: face " + s.face(pos).to_string() +
                                              " of " + s.to_string() + " is missing");
    }

    /// Highest order present; -1 for the empty complex.
    int dimension() const { return static_cast<int>(simplices_.size()) - 1; }

    /// D_k, the number of k-simplices (0 outside [0, dimension]).
    std::size_t count(int k) const
    {
        if (k < 0 || k > dimension()) return 0;
        return simplices_[static_cast<std::size_t>(k)].size();
    }

    std::vector<std::size_t> counts() const
    {
        std::vector<std::size_t> out;
        for (const auto& level : simplices_) out.push_back(level.size());
        return out;
    }

    const std::vector<Simplex>& simplices(int k) const
    {
        static const std::vector<Simplex> empty;
        if (k < 0 || k > dimension()) return empty;
        return simplices_[static_cast<std::size_t>(k)];
    }

    const Simplex& simplex(int k, std::size_t i) const { return simplices(k).at(i); }

    std::optional<std::size_t> index_of(const Simplex& s) const
    {
        int k = s.order();
        if (k < 0 || k > dimension()) return std::nullopt;
        const auto& map = index_[static_cast<std::size_t>(k)];
        auto it = map.find(s);
        if (it == map.end()) return std::nullopt;
        return it->second;
    }

    bool contains(const Simplex& s) const { return index_of(s).has_value(); }

    bool operator==(const SimplicialComplex& other) const { return simplices_ == other.simplices_; }

private:
    std::vector<std::vector<Simplex>> simplices_;
    std::vector<std::map<Simplex, std::size_t>> index_;
};

/// Builds the closure of `simplex_list`, keeping faces of order <= max_order.
/// Duplicates are merged; an input of order above max_order contributes its
/// max_order-skeleton.
inline SimplicialComplex build_complex(const std::vector<std::vector<Vertex>>& simplex_list, int max_order)
{
    if (max_order < 0) throw ValidationError("max_order must be non-negative");
    std::vector<std::set<Simplex>> levels(static_cast<std::size_t>(max_order) + 1);

    // Each input contributes every non-empty vertex subset up to max_order + 1 vertices.
    for (const auto& raw : simplex_list) {
        Simplex top(raw);
        const auto& v = top.vertices();
        if (v.size() > 30) throw ValidationError("simplex " + top.to_string() + " is too large");
        const std::size_t keep = std::min<std::size_t>(v.size(), static_cast<std::size_t>(max_order) + 1);
        std::vector<Vertex> subset;
        // Subsets by size, generated in lexicographic order of position combinations.
        for (std::size_t size = 1; size <= keep; ++size) {
            std::vector<std::size_t> pos(size);
            for (std::size_t i = 0; i < size; ++i) pos[i] = i;
            while (true) {
                subset.clear();
                for (std::size_t p : pos) subset.push_back(v[p]);
                levels[size - 1].insert(Simplex(subset));
                std::size_t i = size;
                while (i > 0 && pos[i - 1] == v.size() - size + i - 1) --i;
                if (i == 0) break;
                ++pos[i - 1];
                for (std::size_t j = i; j < size; ++j) pos[j] = pos[j - 1] + 1;
            }
        }
    }

    std::vector<std::vector<Simplex>> by_order;
    for (auto& level : levels) by_order.emplace_back(level.begin(), level.end());
    return SimplicialComplex(std::move(by_order));
}

} // namespace hodgeopt
