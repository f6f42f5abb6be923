#include "dh2/directions.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace dh2 {

namespace {

bool is_zero_set(std::span<const Vec3> dirs) { return dirs.size() == 1 && dirs[0] == Vec3{}; }

bool lex_less(Vec3 a, Vec3 b) { return std::tie(a.x, a.y, a.z) < std::tie(b.x, b.y, b.z); }

std::size_t lex_smallest(std::span<const Vec3> dirs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dirs.size(); ++i)
        if (lex_less(dirs[i], dirs[best]))
            best = i;
    return best;
}

} // namespace

DirectionHierarchy::DirectionHierarchy(std::vector<DirectionLevel> levels) : levels_(std::move(levels)) {
    son_map_.resize(levels_.size());
    for (std::size_t l = 0; l < levels_.size(); ++l) {
        const auto &here = levels_[l].directions;
        const auto &next = levels_[l + 1 < levels_.size() ? l + 1 : l].directions;
        auto &map = son_map_[l];
        map.resize(here.size());
        for (std::size_t i = 0; i < here.size(); ++i) {
            if (l + 1 == levels_.size()) {
                map[i] = i;
            } else if (here[i] == Vec3{}) {
                // Every unit vector is equally close to 0.
                map[i] = is_zero_set(next) ? 0 : lex_smallest(next);
            } else {
                map[i] = nearest_direction(next, here[i]);
            }
        }
    }
}

std::vector<Vec3> cube_directions(int m) {
    if (m < 1)
        throw std::invalid_argument("cube_directions: grid size must be positive");
    std::vector<Vec3> dirs;
    dirs.reserve(static_cast<std::size_t>(6 * m * m));
    const double h = 2.0 / m;
    for (int axis = 0; axis < 3; ++axis)
        for (double sign : {1.0, -1.0})
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < m; ++c) {
                    Vec3 p;
                    const auto a = static_cast<std::size_t>(axis);
                    p[a] = sign;
                    p[(a + 1) % 3] = -1.0 + (r + 0.5) * h;
                    p[(a + 2) % 3] = -1.0 + (c + 0.5) * h;
                    dirs.push_back(project_to_sphere(p));
                }
    return dirs;
}

DirectionHierarchy build_directions(std::span<const double> level_diameters, double wave_number, double eta1) {
    if (!(eta1 > 0.0))
        throw std::invalid_argument("build_directions: eta1 must be positive");
    if (!(wave_number >= 0.0) || !std::isfinite(wave_number))
        throw std::invalid_argument("build_directions: wave number must be finite and non-negative");

    std::vector<DirectionLevel> levels;
    for (double delta : level_diameters) {
        if (!(delta >= 0.0))
            throw std::invalid_argument("build_directions: diameters must be non-negative");
        DirectionLevel lvl;
        const double square = wave_number * delta > 0.0 ? 2.0 * eta1 / (wave_number * delta) : INFINITY;
        if (square >= 2.0 * std::sqrt(2.0)) {
            lvl.directions = {Vec3{}};
        } else {
            // (2/m) sqrt 2 <= square
            lvl.grid = static_cast<int>(std::ceil(2.0 * std::sqrt(2.0) / square - 1e-12));
            lvl.directions = cube_directions(lvl.grid);
        }
        levels.push_back(std::move(lvl));
    }
    return DirectionHierarchy(std::move(levels));
}

Vec3 project_to_sphere(Vec3 v) {
    const double len = norm(v);
    if (len < 1e-12)
        throw std::domain_error("project_to_sphere: vector too short");
    return (1.0 / len) * v;
}

std::size_t nearest_direction(std::span<const Vec3> dirs, Vec3 z) {
    if (dirs.empty())
        throw std::invalid_argument("nearest_direction: empty direction set");
    if (is_zero_set(dirs))
        return 0;
    const double len = norm(z);
    if (len == 0.0)
        throw std::domain_error("nearest_direction: zero vector has no direction");
    const Vec3 u = (1.0 / len) * z;
    std::size_t best = 0;
    double best_dist = norm(u - dirs[0]);
    for (std::size_t i = 1; i < dirs.size(); ++i) {
        const double d = norm(u - dirs[i]);
        if (d < best_dist || (d == best_dist && lex_less(dirs[i], dirs[best]))) {
            best = i;
            best_dist = d;
        }
    }
    return best;
}

} // namespace dh2
