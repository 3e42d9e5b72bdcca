#pragma once

#include <vector>

#include "photorig/raster.hpp"

namespace photorig {

/// Keeps the largest 4-connected foreground component. `components` receives
/// the number of components found before selection.
RasterMap largest_component(const RasterMap& mask, std::size_t* components = nullptr);

/// 4-connected component labelling; background is -1. Returns the component count.
int label_components(const RasterMap& mask, std::vector<int>& labels);

/// Sets background pixels that are not 8-connected to the image border.
RasterMap fill_enclosed_background(const RasterMap& mask);

/// Exact squared Euclidean distance (pixels) to the nearest set pixel;
/// +inf everywhere when the mask is empty.
std::vector<double> squared_distance_to_set(const RasterMap& mask);

RasterMap dilate(const RasterMap& mask, double radius);
RasterMap erode(const RasterMap& mask, double radius);

/// Set pixels with a 4-neighbour that is unset or outside the grid.
bool is_boundary_pixel(const RasterMap& mask, int x, int y);

/// 4-connected step distance from the mask boundary, inside the mask; -1 outside.
std::vector<int> boundary_step_distance(const RasterMap& mask);

double intersection_over_union(const RasterMap& a, const RasterMap& b);

/// Mask of pixels whose label is one of `labels`.
RasterMap select_labels(const RasterMap& label_map, const std::vector<int>& labels);

RasterMap mask_and(const RasterMap& a, const RasterMap& b);
RasterMap mask_or(const RasterMap& a, const RasterMap& b);
RasterMap mask_minus(const RasterMap& a, const RasterMap& b);

} // namespace photorig
