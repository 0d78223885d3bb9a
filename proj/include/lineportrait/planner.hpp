#pragma once

#include <span>
#include <string>
#include <vector>

#include "lineportrait/geometry.hpp"

namespace lineportrait {

struct PageSpec {
    double width = 148.0;   // mm, A5 portrait
    double height = 210.0;
    double margin = 12.0;
    double pen_width = 0.5;
};

struct PlotDocument {
    std::vector<Path> paths;  // plot order, oriented, mm
    double page_width = 148.0;
    double page_height = 210.0;
    double pen_width = 0.5;
};

struct PlanStats {
    double pen_down_mm = 0.0;
    double pen_up_mm = 0.0;
    std::size_t path_count = 0;
};

/// Uniform scale followed by translation: out = in * scale + offset.
struct FitTransform {
    double scale = 1.0;
    Vec2 offset;

    Vec2 apply(Vec2 p) const { return p * scale + offset; }
};

/// Largest uniform fit of `box` into the page inset by its margin, centred.
FitTransform fit_to_page(const BoundingBox& box, const PageSpec& page);

std::vector<Path> scale_to_page(std::span<const Path> paths, const PageSpec& page);

/// Greedy nearest-endpoint tour starting from `start`. Paths are reversed when their
/// far end is the one reached first; ties go to the lower input index.
std::vector<Path> order_paths(std::span<const Path> paths, Vec2 start = {});

/// Drawing order closer to how a person would plot: feature lines first, then shading,
/// each group sorted top to bottom.
std::vector<Path> order_paths_top_down(std::span<const Path> features, std::span<const Path> shading);

std::string to_svg(const PlotDocument& doc);

PlanStats stats(const PlotDocument& doc);

}  // namespace lineportrait
