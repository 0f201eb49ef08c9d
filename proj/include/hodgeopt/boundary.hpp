/**
 * Signed incidence matrices B_k between (k-1)-simplices (rows) and
 * k-simplices (columns).
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "hodgeopt/complex.hpp"

namespace hodgeopt {

class BoundaryMatrix {
public:
    struct Entry {
        std::size_t row;
        std::size_t col;
        std::int8_t sign;
        bool operator==(const Entry&) const = default;
    };

    BoundaryMatrix() = default;
    BoundaryMatrix(int order, std::size_t rows, std::size_t cols, std::vector<Entry> entries)
        : order_(order), rows_(rows), cols_(cols), entries_(std::move(entries))
    {
    }

    int order() const { return order_; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    /// Column-major (by simplex, then by face position) list of non-zeros.
    const std::vector<Entry>& entries() const { return entries_; }

    template <typename Scalar = double>
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> to_dense() const
    {
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m =
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(
                static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
        for (const Entry& e : entries_)
            m(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) = static_cast<Scalar>(e.sign);
        return m;
    }

    template <typename Scalar = double>
    Eigen::SparseMatrix<Scalar> to_sparse() const
    {
        std::vector<Eigen::Triplet<Scalar>> trips;
        trips.reserve(entries_.size());
        for (const Entry& e : entries_)
            trips.emplace_back(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col),
                               static_cast<Scalar>(e.sign));
        Eigen::SparseMatrix<Scalar> m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
        m.setFromTriplets(trips.begin(), trips.end());
        return m;
    }

    bool operator==(const BoundaryMatrix&) const = default;

private:
    int order_ = 0;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Entry> entries_;
};

/// B_k for 1 <= k <= dimension. Deleting the vertex at position m of the
/// ascending ordering contributes sign (-1)^m.
inline BoundaryMatrix boundary_matrix(const SimplicialComplex& complex, int k)
{
    if (k < 1 || k > complex.dimension())
        throw ValidationError("boundary order " + std::to_string(k) + " outside [1, " +
                              std::to_string(complex.dimension()) + "]");
    const auto& cols = complex.simplices(k);
    std::vector<BoundaryMatrix::Entry> entries;
    entries.reserve(cols.size() * static_cast<std::size_t>(k + 1));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        for (std::size_t pos = 0; pos <= static_cast<std::size_t>(k); ++pos) {
            auto row = complex.index_of(cols[j].face(pos));
            if (!row) throw ValidationError("face missing from complex: " + cols[j].face(pos).to_string());
            entries.push_back({*row, j, static_cast<std::int8_t>(Simplex::face_sign(pos))});
        }
    }
    return BoundaryMatrix(k, complex.count(k - 1), cols.size(), std::move(entries));
}

/// Dense B_k with the conventions B_0 = 0 (0 x D_0) and B_{K+1} = 0 (D_K x 0).
inline Eigen::MatrixXd boundary_dense(const SimplicialComplex& complex, int k)
{
    if (k >= 1 && k <= complex.dimension()) return boundary_matrix(complex, k).to_dense();
    const auto rows = static_cast<Eigen::Index>(complex.count(k - 1));
    const auto cols = static_cast<Eigen::Index>(complex.count(k));
    return Eigen::MatrixXd::Zero(rows, cols);
}

} // namespace hodgeopt
