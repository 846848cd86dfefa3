#pragma once

#include <cstdint>
#include <vector>

#include "exitrate/model.hpp"

namespace exitrate {

/// Uniform tensor grid over the bounding box of a domain, with an interior
/// mask by exact membership. Nodes outside the domain (ball case) and on the
/// bounding box faces act as homogeneous Dirichlet nodes.
class OperatorGrid {
public:
    OperatorGrid(const Domain& D, std::vector<int> resolution);

    int dim() const noexcept { return dim_; }
    const std::vector<int>& shape() const noexcept { return shape_; }
    const std::vector<double>& spacing() const noexcept { return spacing_; }
    double spacing(int axis) const { return spacing_.at(axis); }
    double axis_coord(int axis, int i) const { return origin_[axis] + spacing_[axis] * i; }

    std::int64_t total_nodes() const noexcept { return total_; }
    std::int64_t interior_count() const noexcept { return static_cast<std::int64_t>(interior_nodes_.size()); }

    /// Flat (row-major, last axis fastest) node index from per-axis indices.
    std::int64_t flat_index(const std::vector<int>& multi) const;
    std::vector<int> multi_index(std::int64_t flat) const;

    /// Interior ordinal for a flat node index, or -1 for Dirichlet nodes.
    std::int64_t interior_ordinal(std::int64_t flat) const { return interior_of_flat_[flat]; }
    /// Flat node index of the k-th interior node.
    std::int64_t interior_flat(std::int64_t k) const { return interior_nodes_[k]; }

    Vector coords(std::int64_t flat) const;
    Vector interior_coords(std::int64_t k) const { return coords(interior_nodes_[k]); }

    /// Flat index of the neighbor one node along `axis` (+1/-1), or -1 when
    /// that would leave the grid.
    std::int64_t neighbor(std::int64_t flat, int axis, int direction) const;

    /// Nearest grid node to x (per-axis rounding, clamped to the grid).
    std::int64_t nearest_node(const Vector& x) const;
    /// Interior ordinal of the nearest interior node to x (brute scan among
    /// the neighbors of the nearest node; -1 when the grid has no interior).
    std::int64_t nearest_interior(const Vector& x) const;

    const Domain& domain() const noexcept { return domain_; }

private:
    Domain domain_;
    int dim_;
    std::vector<int> shape_;
    std::vector<double> spacing_;
    Vector origin_;
    std::int64_t total_ = 0;
    std::vector<std::int64_t> strides_;
    std::vector<std::int64_t> interior_of_flat_;
    std::vector<std::int64_t> interior_nodes_;
};

/// Builds the tensor grid; throws when fewer than 4 interior nodes survive
/// the membership mask (degenerate domain at this resolution).
OperatorGrid build_grid(const Domain& D, const std::vector<int>& resolution);
OperatorGrid build_grid(const Domain& D, int resolution);

} // namespace exitrate
