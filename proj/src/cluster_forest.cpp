#include "anisoperc/cluster_forest.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace anisoperc {

ClusterForest::ClusterForest(const Lattice& lattice)
    : lattice_(&lattice), dims_(lattice.dims()), periodic_(lattice.spec().boundary == Boundary::periodic) {
    const auto n = static_cast<std::size_t>(lattice.vertex_count());
    parent_.resize(n);
    size_.resize(n);
    if (periodic_) {
        offset_.resize(n * static_cast<std::size_t>(dims_));
    } else {
        faces_.resize(n);
        face_init_.resize(n);
        for (std::size_t v = 0; v < n; ++v) {
            std::uint16_t mask = 0;
            for (int k = 0; k < dims_; ++k) {
                const int c = lattice.coord(static_cast<Index>(v), k);
                if (c == 0) mask |= static_cast<std::uint16_t>(1u << (2 * k));
                if (c == lattice.side(k) - 1) mask |= static_cast<std::uint16_t>(1u << (2 * k + 1));
            }
            face_init_[v] = mask;
        }
    }
    reset();
}

void ClusterForest::reset() {
    std::iota(parent_.begin(), parent_.end(), 0);
    std::fill(size_.begin(), size_.end(), 1);
    if (periodic_) std::fill(offset_.begin(), offset_.end(), 0);
    else faces_ = face_init_;
    largest_ = 1;
    clusters_ = static_cast<Index>(parent_.size());
    sum_squares_ = parent_.size();
    crossing_ = 0;
}

Index ClusterForest::find(Index x) {
    auto i = static_cast<std::int32_t>(x);
    if (periodic_) {
        std::int32_t acc[kMaxDims];
        return find_with_offset(i, acc);
    }
    while (parent_[i] != i) {
        parent_[i] = parent_[parent_[i]];
        i = parent_[i];
    }
    return i;
}

std::int32_t ClusterForest::find_with_offset(std::int32_t x, std::int32_t* acc) {
    const int dims = dims_;
    for (int k = 0; k < dims; ++k) acc[k] = 0;
    while (true) {
        const std::int32_t p = parent_[x];
        if (p == x) return x;
        std::int32_t* ox = &offset_[static_cast<std::size_t>(x) * dims];
        const std::int32_t g = parent_[p];
        if (g != p) {
            const std::int32_t* op = &offset_[static_cast<std::size_t>(p) * dims];
            for (int k = 0; k < dims; ++k) ox[k] += op[k];
            parent_[x] = g;
        }
        for (int k = 0; k < dims; ++k) acc[k] += ox[k];
        x = parent_[x];
    }
}

std::uint32_t ClusterForest::add_edge(int dir, Index u, Index v) {
    const std::uint32_t before = crossing_;
    std::int32_t ru, rv;
    if (periodic_) {
        std::int32_t du[kMaxDims], dv[kMaxDims];
        ru = find_with_offset(static_cast<std::int32_t>(u), du);
        rv = find_with_offset(static_cast<std::int32_t>(v), dv);
        // Position of rv relative to ru: du + e_dir - dv.
        du[dir] += 1;
        if (ru == rv) {
            for (int k = 0; k < dims_; ++k) {
                if (du[k] != dv[k]) crossing_ |= 1u << k;
            }
            return crossing_ & ~before;
        }
        if (size_[ru] < size_[rv]) {
            std::swap(ru, rv);
            std::int32_t* o = &offset_[static_cast<std::size_t>(rv) * dims_];
            for (int k = 0; k < dims_; ++k) o[k] = dv[k] - du[k];
        } else {
            std::int32_t* o = &offset_[static_cast<std::size_t>(rv) * dims_];
            for (int k = 0; k < dims_; ++k) o[k] = du[k] - dv[k];
        }
    } else {
        ru = static_cast<std::int32_t>(find(u));
        rv = static_cast<std::int32_t>(find(v));
        if (ru == rv) return 0;
        if (size_[ru] < size_[rv]) std::swap(ru, rv);
        const std::uint16_t mask = faces_[ru] | faces_[rv];
        faces_[ru] = mask;
        for (int k = 0; k < dims_; ++k) {
            if (((mask >> (2 * k)) & 3u) == 3u) crossing_ |= 1u << k;
        }
    }
    const std::uint64_t a = static_cast<std::uint64_t>(size_[ru]);
    const std::uint64_t b = static_cast<std::uint64_t>(size_[rv]);
    parent_[rv] = ru;
    size_[ru] = static_cast<std::int32_t>(a + b);
    sum_squares_ += 2 * a * b;
    --clusters_;
    if (static_cast<Index>(a + b) > largest_) largest_ = static_cast<Index>(a + b);
    return crossing_ & ~before;
}

std::vector<Index> ClusterForest::cluster_sizes() {
    std::vector<Index> sizes;
    sizes.reserve(static_cast<std::size_t>(clusters_));
    for (std::size_t v = 0; v < parent_.size(); ++v) {
        if (parent_[v] == static_cast<std::int32_t>(v)) sizes.push_back(size_[v]);
    }
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    return sizes;
}

}  // namespace anisoperc
