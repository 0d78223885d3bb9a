#include "lineportrait/planner.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace lineportrait {

FitTransform fit_to_page(const BoundingBox& box, const PageSpec& page)
{
    if (box.empty() || !(box.width() > 0.0 || box.height() > 0.0))
        throw GeometryError("cannot fit a degenerate bounding box to the page");
    const double avail_w = page.width - 2.0 * page.margin;
    const double avail_h = page.height - 2.0 * page.margin;
    if (!(avail_w > 0.0 && avail_h > 0.0))
        throw GeometryError("page margins leave no drawable area");

    double scale = INFINITY;
    if (box.width() > 0.0)
        scale = std::min(scale, avail_w / box.width());
    if (box.height() > 0.0)
        scale = std::min(scale, avail_h / box.height());

    const Vec2 box_center{(box.min.x + box.max.x) / 2, (box.min.y + box.max.y) / 2};
    const Vec2 page_center{page.width / 2, page.height / 2};
    return {scale, page_center - box_center * scale};
}

std::vector<Path> scale_to_page(std::span<const Path> paths, const PageSpec& page)
{
    const auto fit = fit_to_page(bounding_box(paths), page);
    std::vector<Path> out(paths.begin(), paths.end());
    for (auto& path : out)
        for (auto& p : path.points)
            p = fit.apply(p);
    return out;
}

std::vector<Path> order_paths(std::span<const Path> paths, Vec2 start)
{
    std::vector<Path> out;
    out.reserve(paths.size());
    std::vector<bool> used(paths.size(), false);
    Vec2 pen = start;

    for (std::size_t step = 0; step < paths.size(); ++step) {
        std::size_t best = paths.size();
        bool best_reversed = false;
        double best_d = INFINITY;
        for (std::size_t i = 0; i < paths.size(); ++i) {
            if (used[i] || paths[i].points.empty())
                continue;
            const double d_front = distance(pen, paths[i].points.front());
            const double d_back = distance(pen, paths[i].points.back());
            const double d = std::min(d_front, d_back);
            if (d < best_d) {
                best_d = d;
                best = i;
                best_reversed = d_back < d_front;
            }
        }
        if (best == paths.size())
            break;
        used[best] = true;
        Path p = paths[best];
        if (best_reversed)
            std::reverse(p.points.begin(), p.points.end());
        pen = p.points.back();
        out.push_back(std::move(p));
    }
    // Empty paths carry no geometry; keep them so the output stays a permutation.
    for (std::size_t i = 0; i < paths.size(); ++i)
        if (!used[i])
            out.push_back(paths[i]);
    return out;
}

std::vector<Path> order_paths_top_down(std::span<const Path> features, std::span<const Path> shading)
{
    auto sorted = [](std::span<const Path> group) {
        std::vector<Path> out(group.begin(), group.end());
        for (auto& p : out)
            if (!p.points.empty() && p.points.back().y < p.points.front().y)
                std::reverse(p.points.begin(), p.points.end());
        std::stable_sort(out.begin(), out.end(), [](const Path& a, const Path& b) {
            const double ya = a.points.empty() ? 0.0 : bounding_box(a.points).min.y;
            const double yb = b.points.empty() ? 0.0 : bounding_box(b.points).min.y;
            return ya < yb;
        });
        return out;
    };
    auto out = sorted(features);
    auto rest = sorted(shading);
    out.insert(out.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
    return out;
}

namespace {

void append_number(std::string& out, double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    // Trim trailing zeros to keep files small; "-0" is normalised.
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0')
            s.pop_back();
        if (s.back() == '.')
            s.pop_back();
    }
    if (s == "-0")
        s = "0";
    out += s;
}

}  // namespace

std::string to_svg(const PlotDocument& doc)
{
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"";
    append_number(out, doc.page_width);
    out += "mm\" height=\"";
    append_number(out, doc.page_height);
    out += "mm\" viewBox=\"0 0 ";
    append_number(out, doc.page_width);
    out += " ";
    append_number(out, doc.page_height);
    out += "\">\n";
    out += "<g fill=\"none\" stroke=\"#000000\" stroke-width=\"";
    append_number(out, doc.pen_width);
    out += "\" stroke-linecap=\"round\" stroke-linejoin=\"round\">\n";
    for (const auto& path : doc.paths) {
        out += "<polyline points=\"";
        for (std::size_t i = 0; i < path.points.size(); ++i) {
            if (i > 0)
                out += ' ';
            append_number(out, path.points[i].x);
            out += ',';
            append_number(out, path.points[i].y);
        }
        out += "\"/>\n";
    }
    out += "</g>\n</svg>\n";
    return out;
}

PlanStats stats(const PlotDocument& doc)
{
    PlanStats s;
    Vec2 pen;
    for (const auto& path : doc.paths) {
        if (path.points.empty())
            continue;
        s.pen_up_mm += distance(pen, path.points.front());
        s.pen_down_mm += path_length(path);
        pen = path.points.back();
        ++s.path_count;
    }
    return s;
}

}  // namespace lineportrait
