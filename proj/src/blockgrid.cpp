#include "voxelcast/blockgrid.hpp"

#include "voxelcast/camera.hpp"
#include "voxelcast/error.hpp"

#include <algorithm>
#include <cmath>

namespace voxelcast {

BlockGrid::BlockGrid(int block_size, int overlap, Dims volume_dims, Vec3 spacing, std::array<int, 3> counts,
                     std::vector<Block> blocks)
    : block_size_(block_size)
    , overlap_(overlap)
    , volume_dims_(volume_dims)
    , spacing_(spacing)
    , counts_(counts)
    , blocks_(std::move(blocks))
{
}

std::size_t BlockGrid::empty_count() const noexcept
{
    return static_cast<std::size_t>(std::count_if(blocks_.begin(), blocks_.end(), [](const Block& b) { return b.empty; }));
}

int BlockGrid::owner(int axis, double p) const noexcept
{
    const int i = static_cast<int>(std::floor((p - 1.0) / stride()));
    return std::clamp(i, 0, counts_[axis] - 1);
}

int blocks_per_axis(int voxels, int block_size, int overlap)
{
    const int stride = block_size - overlap;
    if (voxels <= block_size) return 1;
    return (voxels - block_size + stride - 1) / stride + 1;
}

BlockGrid decompose(const ScalarVolume& volume, int block_size, int overlap)
{
    if (block_size < 8) {
        throw Error(ErrorCode::InvalidBlockSpec, "block size must be at least 8", "block_size");
    }
    if (overlap < 1 || overlap >= block_size) {
        throw Error(ErrorCode::InvalidBlockSpec, "overlap must lie in [1, block_size)", "overlap");
    }
    const Dims dims = volume.dims();
    const int stride = block_size - overlap;
    const std::array<int, 3> counts{blocks_per_axis(dims.nx, block_size, overlap), blocks_per_axis(dims.ny, block_size, overlap),
                                    blocks_per_axis(dims.nz, block_size, overlap)};
    std::vector<Block> blocks;
    blocks.reserve(static_cast<std::size_t>(counts[0]) * counts[1] * counts[2]);
    for (int bk = 0; bk < counts[2]; ++bk) {
        for (int bj = 0; bj < counts[1]; ++bj) {
            for (int bi = 0; bi < counts[0]; ++bi) {
                Block b;
                b.index = {bi, bj, bk};
                const int idx[3] = {bi, bj, bk};
                for (int a = 0; a < 3; ++a) {
                    b.origin[a] = idx[a] * stride;
                    b.extent[a] = std::min(block_size, dims[a] - b.origin[a]);
                }
                std::int16_t lo = volume.at(b.origin[0], b.origin[1], b.origin[2]);
                std::int16_t hi = lo;
                for (int k = b.origin[2]; k < b.origin[2] + b.extent[2]; ++k) {
                    for (int j = b.origin[1]; j < b.origin[1] + b.extent[1]; ++j) {
                        const std::int16_t* row = volume.values().data() + volume.index(b.origin[0], j, k);
                        const auto [mn, mx] = std::minmax_element(row, row + b.extent[0]);
                        lo = std::min(lo, *mn);
                        hi = std::max(hi, *mx);
                    }
                }
                b.value_min = lo;
                b.value_max = hi;
                blocks.push_back(b);
            }
        }
    }
    return BlockGrid(block_size, overlap, dims, volume.spacing(), counts, std::move(blocks));
}

BlockGrid cull_empty(BlockGrid grid, const ClassifiedLUT& lut)
{
    for (Block& b : grid.blocks()) {
        b.empty = lut.max_opacity(b.value_min, b.value_max) <= 0.0f;
        if (b.empty) {
            b.tight_aabb.reset();
        }
    }
    return grid;
}

Block fit_bounding_box(const ScalarVolume& volume, const Block& block, const ClassifiedLUT& lut)
{
    if (block.empty) {
        throw Error(ErrorCode::EmptyBlock, "block has no visible voxels");
    }
    std::array<int, 3> lo{block.origin[0] + block.extent[0], block.origin[1] + block.extent[1], block.origin[2] + block.extent[2]};
    std::array<int, 3> hi{block.origin[0] - 1, block.origin[1] - 1, block.origin[2] - 1};
    for (int k = block.origin[2]; k < block.origin[2] + block.extent[2]; ++k) {
        for (int j = block.origin[1]; j < block.origin[1] + block.extent[1]; ++j) {
            for (int i = block.origin[0]; i < block.origin[0] + block.extent[0]; ++i) {
                if (lut.lookup(volume.at(i, j, k)).a > 0.0f) {
                    lo = {std::min(lo[0], i), std::min(lo[1], j), std::min(lo[2], k)};
                    hi = {std::max(hi[0], i), std::max(hi[1], j), std::max(hi[2], k)};
                }
            }
        }
    }
    if (hi[0] < lo[0]) {
        // The value range reaches visible bins but no voxel does.
        throw Error(ErrorCode::EmptyBlock, "block has no voxel with nonzero opacity");
    }
    Block out = block;
    VoxelBox box;
    for (int a = 0; a < 3; ++a) {
        box.lo[a] = std::max(lo[a] - 1, block.origin[a]);
        box.hi[a] = std::min(hi[a] + 1, block.origin[a] + block.extent[a] - 1);
    }
    out.tight_aabb = box;
    return out;
}

BlockGrid classify_blocks(const ScalarVolume& volume, BlockGrid grid, const ClassifiedLUT& lut)
{
    grid = cull_empty(std::move(grid), lut);
    for (Block& b : grid.blocks()) {
        if (b.empty) continue;
        try {
            b = fit_bounding_box(volume, b, lut);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyBlock) throw;
            // Nothing visible although the range straddles visible bins; the
            // whole block stays eligible for sampling.
            b.tight_aabb = b.bounds();
        }
    }
    return grid;
}

std::vector<BlockIndex> traversal_order(const BlockGrid& grid, const Camera& camera)
{
    struct Entry {
        double distance;
        BlockIndex index;
    };
    std::vector<Entry> entries;
    const Vec3 spacing = grid.spacing();
    for (const Block& b : grid.blocks()) {
        if (b.empty) continue;
        const Vec3 center{(b.origin[0] + (b.extent[0] - 1) * 0.5) * spacing.x, (b.origin[1] + (b.extent[1] - 1) * 0.5) * spacing.y,
                          (b.origin[2] + (b.extent[2] - 1) * 0.5) * spacing.z};
        entries.push_back({length(center - camera.position), b.index});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.index < b.index;
    });
    std::vector<BlockIndex> order;
    order.reserve(entries.size());
    for (const Entry& e : entries) order.push_back(e.index);
    return order;
}

nlohmann::json block_stats_json(const BlockGrid& grid, bool per_block)
{
    nlohmann::json j = {
        {"block_size", grid.block_size()},
        {"overlap", grid.overlap()},
        {"counts", grid.counts()},
        {"total", grid.total()},
        {"empty", grid.empty_count()},
        {"empty_percent", 100.0 * grid.empty_fraction()},
    };
    if (per_block) {
        nlohmann::json blocks = nlohmann::json::array();
        for (const Block& b : grid.blocks()) {
            nlohmann::json e = {
                {"index", {b.index.i, b.index.j, b.index.k}},
                {"min", b.value_min},
                {"max", b.value_max},
                {"empty", b.empty},
            };
            if (b.tight_aabb) {
                e["tight_aabb"] = {{"lo", b.tight_aabb->lo}, {"hi", b.tight_aabb->hi}};
            }
            blocks.push_back(std::move(e));
        }
        j["blocks"] = std::move(blocks);
    }
    return j;
}

}  // namespace voxelcast
