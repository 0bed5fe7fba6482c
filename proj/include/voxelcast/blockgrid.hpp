#pragma once

#include "voxelcast/classification.hpp"
#include "voxelcast/vec.hpp"
#include "voxelcast/volume.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace voxelcast {

struct Camera;

struct BlockIndex {
    int i = 0;
    int j = 0;
    int k = 0;
    friend constexpr bool operator==(BlockIndex, BlockIndex) = default;
    friend constexpr auto operator<=>(BlockIndex, BlockIndex) = default;
};

/// Inclusive voxel box.
struct VoxelBox {
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> hi{0, 0, 0};

    bool contains(int i, int j, int k) const noexcept
    {
        return i >= lo[0] && i <= hi[0] && j >= lo[1] && j <= hi[1] && k >= lo[2] && k <= hi[2];
    }
    friend bool operator==(const VoxelBox&, const VoxelBox&) = default;
};

struct Block {
    BlockIndex index;
    std::array<int, 3> origin{0, 0, 0};
    std::array<int, 3> extent{0, 0, 0};
    std::int16_t value_min = 0;
    std::int16_t value_max = 0;
    bool empty = false;
    std::optional<VoxelBox> tight_aabb;

    VoxelBox bounds() const noexcept
    {
        return {origin, {origin[0] + extent[0] - 1, origin[1] + extent[1] - 1, origin[2] + extent[2] - 1}};
    }
};

/// Dense grid of overlapping bricks. Block (i,j,k) covers
/// [i*stride, i*stride + B) per axis, clipped to the volume, stride = B - overlap.
class BlockGrid {
public:
    static constexpr int kDefaultBlockSize = 64;
    static constexpr int kDefaultOverlap = 3;

    BlockGrid(int block_size, int overlap, Dims volume_dims, Vec3 spacing, std::array<int, 3> counts, std::vector<Block> blocks);

    int block_size() const noexcept { return block_size_; }
    int overlap() const noexcept { return overlap_; }
    int stride() const noexcept { return block_size_ - overlap_; }
    Dims volume_dims() const noexcept { return volume_dims_; }
    Vec3 spacing() const noexcept { return spacing_; }
    std::array<int, 3> counts() const noexcept { return counts_; }

    std::size_t total() const noexcept { return blocks_.size(); }
    std::size_t empty_count() const noexcept;
    double empty_fraction() const noexcept { return total() ? double(empty_count()) / double(total()) : 0.0; }

    std::size_t linear_index(BlockIndex b) const noexcept
    {
        return static_cast<std::size_t>(b.i) + static_cast<std::size_t>(counts_[0]) * (b.j + static_cast<std::size_t>(counts_[1]) * b.k);
    }
    const Block& at(BlockIndex b) const noexcept { return blocks_[linear_index(b)]; }
    Block& at(BlockIndex b) noexcept { return blocks_[linear_index(b)]; }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }
    std::vector<Block>& blocks() noexcept { return blocks_; }

    /// Lower edge (continuous voxel coordinate) of block `i`'s core region on
    /// `axis`. A sample belongs to the block whose core contains it; the core
    /// of block i is [i*stride + 1, (i+1)*stride + 1), open-ended at the
    /// volume borders. The one-voxel shift keeps the 4-tap cubic support of
    /// every core sample inside the block.
    double core_begin(int /*axis*/, int i) const noexcept { return static_cast<double>(i) * stride() + 1.0; }

    /// Block coordinate along `axis` owning continuous voxel coordinate p.
    int owner(int axis, double p) const noexcept;

private:
    int block_size_;
    int overlap_;
    Dims volume_dims_;
    Vec3 spacing_;
    std::array<int, 3> counts_;
    std::vector<Block> blocks_;
};

int blocks_per_axis(int voxels, int block_size, int overlap);

BlockGrid decompose(const ScalarVolume& volume, int block_size = BlockGrid::kDefaultBlockSize,
                    int overlap = BlockGrid::kDefaultOverlap);

/// Marks blocks whose value range only reaches zero-opacity LUT bins.
BlockGrid cull_empty(BlockGrid grid, const ClassifiedLUT& lut);

/// Tight box of nonzero-opacity voxels, dilated by one voxel and clipped to the block.
Block fit_bounding_box(const ScalarVolume& volume, const Block& block, const ClassifiedLUT& lut);

/// cull_empty followed by fit_bounding_box on every surviving block.
BlockGrid classify_blocks(const ScalarVolume& volume, BlockGrid grid, const ClassifiedLUT& lut);

/// Non-empty blocks sorted by distance from the camera to the block centre.
std::vector<BlockIndex> traversal_order(const BlockGrid& grid, const Camera& camera);

/// Totals, empty percentage and per-block value ranges.
nlohmann::json block_stats_json(const BlockGrid& grid, bool per_block = true);

}  // namespace voxelcast
