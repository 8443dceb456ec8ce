#pragma once

#include <set>
#include <string>
#include <vector>

#include "leishquant/segment.hpp"

namespace lq {

enum class AssociationMode { cytoplasm, radius, both };

AssociationMode association_mode_from_string(const std::string& s);
std::string to_string(AssociationMode mode);

// A nucleus centroid taking part in the association (post-declustering).
struct Nucleus {
    int id = 0;
    double cx = 0.0;
    double cy = 0.0;
};

struct AssociationResult {
    std::vector<std::pair<int, int>> pairs;  // (parasite id, macrophage id)
    std::vector<int> unassociated;           // parasite ids
    std::set<int> infected_macrophages;
    AssociationMode mode = AssociationMode::both;
};

// Raster of cytoplasm region ids (0 = background) for point-membership lookup.
struct CytoplasmMap {
    int width = 0;
    int height = 0;
    std::vector<int> ids;

    CytoplasmMap() = default;
    CytoplasmMap(const std::vector<Region>& regions, int width, int height);
    int id_at(double x, double y) const;  // 0 when outside every region or out of bounds
};

// Default radius: the radius of the circle whose area is the uni-nucleic mean,
// i.e. 50% of the average cell diameter at that zoom level.
double default_association_radius(double mean_area);

AssociationResult associate(const std::vector<Nucleus>& macrophages,
                            const std::vector<Nucleus>& parasites,
                            const CytoplasmMap& cytoplasm, AssociationMode mode, double radius);

}  // namespace lq
