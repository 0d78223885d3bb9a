#pragma once

#include <string>
#include <vector>

#include "lineportrait/geometry.hpp"

namespace lineportrait {

inline constexpr int kCurveSubdivisions = 64;

/// Flattens the drawable elements of a template sketch SVG into one polyline per stroke.
///
/// Each `<path>` subpath becomes a stroke; line commands map to vertices and Bezier and
/// arc segments are sampled at kCurveSubdivisions steps. `<polyline>`, `<polygon>`,
/// `<line>`, `<circle>` and `<ellipse>` are accepted too. Transforms are not applied.
std::vector<Path> load_sketch_svg(const std::string& svg_text);
std::vector<Path> load_sketch_svg_file(const std::string& path);

/// Flattens a single SVG path `d` attribute.
std::vector<Path> parse_path_data(const std::string& d);

}  // namespace lineportrait
