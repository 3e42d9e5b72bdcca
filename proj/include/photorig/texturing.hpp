#pragma once

#include <map>
#include <optional>
#include <vector>

#include "photorig/core.hpp"
#include "photorig/raster.hpp"

namespace photorig {

/// Colour of one surface seen from the front, in the input image frame.
struct FrontTile {
    RasterMap color;   ///< RGB; zero outside the domain
    RasterMap flagged; ///< domain pixels hidden in the photo, filled by interpolation
};

/// Copies `image` on `visible` pixels of `domain`. Domain pixels that are not
/// visible (surface hidden behind an occluder) are flagged and filled
/// harmonically from the visible ones.
FrontTile project_front(const RasterMap& image, const RasterMap& visible, const RasterMap& domain,
                        Diagnostics* diag = nullptr);

enum class BackMode { mirror, inpaint };

std::string_view to_string(BackMode mode);
BackMode back_mode_from_string(std::string_view name);

/// Label guidance for inpainting. Ids need not be body parts: a user may
/// paint extra regions (say, hair) into the front labels and assign them to
/// back regions.
struct InpaintGuide {
    RasterMap back_labels; ///< back (mirrored) frame; empty means the mirrored front labels
    bool coherence = true; ///< snap filled pixels to the best-matching donor patch
    int patch = 7;
    std::size_t max_candidates = 2048; ///< donor patch centres searched per region
};

/// Where inpainted back pixels got their colour, keyed by the front label of
/// the source pixel.
struct Provenance {
    std::map<int, std::size_t> seeded; ///< seam values copied from the front
    std::map<int, std::size_t> snapped; ///< coherence-pass donor copies
    std::size_t mean_filled = 0;        ///< pixels left at a mean colour
};

/// Back tile in the back-camera (mirrored) frame. Mirror mode pastes the
/// front tile flipped left to right. Inpaint mode fills each back label
/// region from front pixels of the same label: values on the silhouette
/// seam are copied across, the interior is harmonic (seeded with the donor
/// mean), then optionally snapped to donor patch colours.
RasterMap synthesize_back(const RasterMap& front, const RasterMap& front_labels, BackMode mode,
                          const InpaintGuide& guide = {}, Provenance* provenance = nullptr,
                          Diagnostics* diag = nullptr);

struct BlendedTiles {
    RasterMap front;
    RasterMap back;
    RasterMap band; ///< front frame; pixels whose front and mirrored back colours may change
};

/// Poisson blend across the silhouette seam. Seam pixels (the boundary of
/// `domain`) are shared between the front tile and the mirrored back tile;
/// the band covers pixels fewer than `width` steps from the seam on both
/// tiles. Guidance is the source gradient of each tile, and pixels at exactly
/// `width` steps are fixed.
BlendedTiles blend_seam(const RasterMap& front, const RasterMap& back, const RasterMap& domain, int width);

/// A row of front/back tile pairs, one row per surface.
struct Atlas {
    RasterMap image;
    int tile_width = 0;
    int tile_height = 0;
    int surfaces = 0;

    /// Texture coordinate (glTF convention, origin top-left) of a pixel centre.
    Vec2 uv(int surface, bool back, const Vec2& pixel) const;
};

Atlas compose_atlas(const std::vector<BlendedTiles>& tiles);

} // namespace photorig
