#pragma once
//
// Hierarchical direction sets built by projecting a regular grid on the
// surface of [-1,1]^3 to the unit sphere, plus the compatible son maps
// (nearest direction on the next level).
//

#include "dh2/geometry.hpp"

#include <span>
#include <vector>

namespace dh2 {

struct DirectionLevel {
    int grid = 0;                 // squares per cube edge, 0 for the {0} set
    std::vector<Vec3> directions; // unit vectors, or the single zero vector
};

class DirectionHierarchy {
  public:
    DirectionHierarchy() = default;
    DirectionHierarchy(std::vector<DirectionLevel> levels);

    std::size_t level_count() const { return levels_.size(); }
    const DirectionLevel &level(int l) const { return levels_.at(static_cast<std::size_t>(l)); }
    std::span<const Vec3> directions(int l) const { return level(l).directions; }
    std::size_t count(int l) const { return level(l).directions.size(); }
    Vec3 direction(int l, std::size_t idx) const { return level(l).directions.at(idx); }

    // Index in level l+1 of the son direction of direction `idx` on level l.
    // The deepest level maps to itself.
    std::size_t son(int l, std::size_t idx) const { return son_map_.at(static_cast<std::size_t>(l)).at(idx); }

  private:
    std::vector<DirectionLevel> levels_;
    std::vector<std::vector<std::size_t>> son_map_;
};

// Projected midpoints of an m x m grid on each face of [-1,1]^3,
// face-major (+x, -x, +y, -y, +z, -z), row-major inside a face.
std::vector<Vec3> cube_directions(int m);

// One level per entry of `level_diameters`. A level whose covering radius
// eta1 / (kappa delta) allows one square per face (diagonal 2 sqrt 2) gets
// the set {0}; otherwise the minimal grid with diagonal <= 2 eta1/(kappa delta).
DirectionHierarchy build_directions(std::span<const double> level_diameters, double wave_number, double eta1);

Vec3 project_to_sphere(Vec3 v);

// Index of the direction closest to z / |z| (lexicographically smallest
// direction on ties). Returns 0 for the set {0}.
std::size_t nearest_direction(std::span<const Vec3> dirs, Vec3 z);

} // namespace dh2
