#include "exitrate/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace exitrate {

OperatorGrid::OperatorGrid(const Domain& D, std::vector<int> resolution)
    : domain_(D), dim_(D.dim()), shape_(std::move(resolution)) {
    if (static_cast<int>(shape_.size()) == 1 && dim_ > 1) {
        shape_.assign(static_cast<std::size_t>(dim_), shape_[0]);
    }
    if (static_cast<int>(shape_.size()) != dim_) {
        throw DimensionError("grid resolution list must match the domain dimension");
    }
    if (dim_ > 3) {
        throw PreconditionError("grid-based operators support d <= 3");
    }
    for (int r : shape_) {
        if (r < 2) {
            throw PreconditionError("grid needs at least 2 nodes per axis");
        }
    }

    Vector lo, hi;
    domain_.bounding_box(lo, hi);
    origin_ = lo;
    spacing_.resize(static_cast<std::size_t>(dim_));
    for (int ax = 0; ax < dim_; ++ax) {
        spacing_[static_cast<std::size_t>(ax)] = (hi[ax] - lo[ax]) / (shape_[static_cast<std::size_t>(ax)] - 1);
    }

    strides_.assign(static_cast<std::size_t>(dim_), 1);
    total_ = 1;
    for (int ax = dim_ - 1; ax >= 0; --ax) {
        strides_[static_cast<std::size_t>(ax)] = total_;
        total_ *= shape_[static_cast<std::size_t>(ax)];
    }

    interior_of_flat_.assign(static_cast<std::size_t>(total_), -1);
    for (std::int64_t flat = 0; flat < total_; ++flat) {
        const std::vector<int> mi = multi_index(flat);
        bool on_face = false;
        for (int ax = 0; ax < dim_; ++ax) {
            if (mi[static_cast<std::size_t>(ax)] == 0 ||
                mi[static_cast<std::size_t>(ax)] == shape_[static_cast<std::size_t>(ax)] - 1) {
                on_face = true;
                break;
            }
        }
        if (on_face) continue;
        if (!domain_.contains(coords(flat))) continue;
        interior_of_flat_[static_cast<std::size_t>(flat)] = static_cast<std::int64_t>(interior_nodes_.size());
        interior_nodes_.push_back(flat);
    }
}

std::int64_t OperatorGrid::flat_index(const std::vector<int>& multi) const {
    std::int64_t flat = 0;
    for (int ax = 0; ax < dim_; ++ax) {
        flat += strides_[static_cast<std::size_t>(ax)] * multi[static_cast<std::size_t>(ax)];
    }
    return flat;
}

std::vector<int> OperatorGrid::multi_index(std::int64_t flat) const {
    std::vector<int> mi(static_cast<std::size_t>(dim_));
    for (int ax = 0; ax < dim_; ++ax) {
        mi[static_cast<std::size_t>(ax)] =
            static_cast<int>(flat / strides_[static_cast<std::size_t>(ax)]);
        flat %= strides_[static_cast<std::size_t>(ax)];
    }
    return mi;
}

Vector OperatorGrid::coords(std::int64_t flat) const {
    const std::vector<int> mi = multi_index(flat);
    Vector x(dim_);
    for (int ax = 0; ax < dim_; ++ax) {
        x[ax] = axis_coord(ax, mi[static_cast<std::size_t>(ax)]);
    }
    return x;
}

std::int64_t OperatorGrid::neighbor(std::int64_t flat, int axis, int direction) const {
    if (flat < 0) return -1;
    const std::vector<int> mi = multi_index(flat);
    const int i = mi[static_cast<std::size_t>(axis)] + direction;
    if (i < 0 || i >= shape_[static_cast<std::size_t>(axis)]) return -1;
    return flat + direction * strides_[static_cast<std::size_t>(axis)];
}

std::int64_t OperatorGrid::nearest_node(const Vector& x) const {
    std::vector<int> mi(static_cast<std::size_t>(dim_));
    for (int ax = 0; ax < dim_; ++ax) {
        const double pos = (x[ax] - origin_[ax]) / spacing_[static_cast<std::size_t>(ax)];
        int i = static_cast<int>(std::lround(pos));
        i = std::max(0, std::min(shape_[static_cast<std::size_t>(ax)] - 1, i));
        mi[static_cast<std::size_t>(ax)] = i;
    }
    return flat_index(mi);
}

std::int64_t OperatorGrid::nearest_interior(const Vector& x) const {
    const std::int64_t flat = nearest_node(x);
    const std::int64_t ord = interior_ordinal(flat);
    if (ord >= 0) return ord;
    // Scan outward over the axis neighbors of the nearest node.
    double best_dist = std::numeric_limits<double>::infinity();
    std::int64_t best = -1;
    for (int ax = 0; ax < dim_; ++ax) {
        for (int dir : {-1, 1}) {
            const std::int64_t nb = neighbor(flat, ax, dir);
            if (nb < 0) continue;
            const std::int64_t nb_ord = interior_ordinal(nb);
            if (nb_ord < 0) continue;
            const double dist = (coords(nb) - x).norm();
            if (dist < best_dist) {
                best_dist = dist;
                best = nb_ord;
            }
        }
    }
    return best;
}

OperatorGrid build_grid(const Domain& D, const std::vector<int>& resolution) {
    for (int r : resolution) {
        if (r < 8) {
            throw PreconditionError("build_grid requires at least 8 nodes per axis");
        }
    }
    OperatorGrid grid(D, resolution);
    if (grid.interior_count() < 4) {
        throw PreconditionError("degenerate domain: fewer than 4 interior nodes at this resolution");
    }
    return grid;
}

OperatorGrid build_grid(const Domain& D, int resolution) {
    return build_grid(D, std::vector<int>(static_cast<std::size_t>(D.dim()), resolution));
}

} // namespace exitrate
