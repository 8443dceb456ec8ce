#include "leishquant/associate.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace lq {

AssociationMode association_mode_from_string(const std::string& s) {
    if (s == "cytoplasm")
        return AssociationMode::cytoplasm;
    if (s == "radius")
        return AssociationMode::radius;
    if (s == "both")
        return AssociationMode::both;
    throw std::invalid_argument("unknown association mode: " + s);
}

std::string to_string(AssociationMode mode) {
    switch (mode) {
        case AssociationMode::cytoplasm: return "cytoplasm";
        case AssociationMode::radius: return "radius";
        case AssociationMode::both: return "both";
    }
    return "both";
}

CytoplasmMap::CytoplasmMap(const std::vector<Region>& regions, int w, int h)
    : width(w), height(h), ids(static_cast<std::size_t>(w) * h, 0) {
    for (const auto& r : regions)
        for (auto [x, y] : r.pixels)
            ids[static_cast<std::size_t>(y) * width + x] = r.id;
}

int CytoplasmMap::id_at(double x, double y) const {
    int xi = static_cast<int>(std::lround(x));
    int yi = static_cast<int>(std::lround(y));
    if (xi < 0 || xi >= width || yi < 0 || yi >= height || ids.empty())
        return 0;
    return ids[static_cast<std::size_t>(yi) * width + xi];
}

double default_association_radius(double mean_area) {
    return std::sqrt(mean_area / std::numbers::pi);
}

AssociationResult associate(const std::vector<Nucleus>& macrophages,
                            const std::vector<Nucleus>& parasites,
                            const CytoplasmMap& cytoplasm, AssociationMode mode, double radius) {
    const bool uses_radius = (mode != AssociationMode::cytoplasm);
    const bool uses_cytoplasm = (mode != AssociationMode::radius);
    if (uses_radius && !(radius > 0.0))
        throw std::invalid_argument("associate: radius must be > 0 for this mode");

    AssociationResult result;
    result.mode = mode;

    // each macrophage nucleus belongs to the cytoplasm region under its centroid
    std::vector<int> macro_cyto(macrophages.size(), 0);
    if (uses_cytoplasm)
        for (std::size_t i = 0; i < macrophages.size(); ++i)
            macro_cyto[i] = cytoplasm.id_at(macrophages[i].cx, macrophages[i].cy);

    for (const auto& p : parasites) {
        int para_cyto = uses_cytoplasm ? cytoplasm.id_at(p.cx, p.cy) : 0;
        int best_id = -1;
        double best_dist = std::numeric_limits<double>::max();
        for (std::size_t i = 0; i < macrophages.size(); ++i) {
            const auto& m = macrophages[i];
            double d = std::hypot(p.cx - m.cx, p.cy - m.cy);
            if (uses_radius && d > radius)
                continue;
            if (uses_cytoplasm && (para_cyto == 0 || macro_cyto[i] != para_cyto))
                continue;
            // minimum distance wins; exact ties go to the lower macrophage id
            if (d < best_dist - 1e-9 ||
                (std::abs(d - best_dist) <= 1e-9 && best_id >= 0 && m.id < best_id)) {
                best_dist = d;
                best_id = m.id;
            }
        }
        if (best_id >= 0) {
            result.pairs.emplace_back(p.id, best_id);
            result.infected_macrophages.insert(best_id);
        } else {
            result.unassociated.push_back(p.id);
        }
    }
    return result;
}

}  // namespace lq
