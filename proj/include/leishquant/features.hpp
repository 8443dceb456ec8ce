#pragma once

#include <utility>

#include "leishquant/segment.hpp"

namespace lq {

enum class ShapeClass { circular_or_elliptical, other };

struct BBox {
    int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

// Low-level feature vector: area, centre of mass, bounding box, shape scalar.
struct FeatureVector {
    long long area = 0;
    double cx = 0.0, cy = 0.0;
    BBox bbox;
    ShapeClass shape = ShapeClass::circular_or_elliptical;
};

std::pair<double, double> centroid(const Region& region);

BBox min_bbox(const Region& region);

// Moore boundary trace, clockwise, from the top-most then left-most pixel.
ChainCode freeman_chain(const Region& region);

// Perimeter from the chain codes, diagonal moves weighted sqrt(2).
double chain_perimeter(const ChainCode& chain);

// Isoperimetric ratio 4*pi*A/P^2 against `cutoff`; degenerate chains are circular.
ShapeClass shape_descriptor(const ChainCode& chain, long long area, double cutoff = 0.5);

// Fills region.contour as a side effect.
FeatureVector extract_features(Region& region);

}  // namespace lq
