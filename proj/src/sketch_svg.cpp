#include "lineportrait/sketch_svg.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace lineportrait {

namespace {

class PathDataReader {
public:
    explicit PathDataReader(const std::string& d) : s_(d) {}

    void skip_separators()
    {
        while (pos_ < s_.size() && (std::isspace(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == ','))
            ++pos_;
    }

    bool done()
    {
        skip_separators();
        return pos_ >= s_.size();
    }

    bool at_command()
    {
        skip_separators();
        return pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != 'e' &&
               s_[pos_] != 'E';
    }

    char command() { return s_[pos_++]; }

    bool at_number()
    {
        skip_separators();
        if (pos_ >= s_.size())
            return false;
        const char c = s_[pos_];
        return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
    }

    double number()
    {
        skip_separators();
        const std::size_t start = pos_;
        if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+'))
            ++pos_;
        bool seen_dot = false;
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '.' && !seen_dot) {
                seen_dot = true;
                ++pos_;
            } else {
                break;
            }
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < s_.size() && (s_[p] == '-' || s_[p] == '+'))
                ++p;
            if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
                pos_ = p;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                    ++pos_;
            }
        }
        if (pos_ == start)
            throw std::runtime_error("malformed number in path data at offset " + std::to_string(start));
        return std::stod(s_.substr(start, pos_ - start));
    }

    bool flag()
    {
        skip_separators();
        if (pos_ < s_.size() && (s_[pos_] == '0' || s_[pos_] == '1'))
            return s_[pos_++] == '1';
        throw std::runtime_error("malformed arc flag in path data at offset " + std::to_string(pos_));
    }

    Vec2 point() { double x = number(); return {x, number()}; }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

void push_point(Path& path, Vec2 p)
{
    if (path.points.empty() || path.points.back() != p)
        path.points.push_back(p);
}

void sample_cubic(Path& path, Vec2 p0, Vec2 c1, Vec2 c2, Vec2 p3)
{
    for (int i = 1; i <= kCurveSubdivisions; ++i) {
        const double t = double(i) / kCurveSubdivisions, u = 1.0 - t;
        push_point(path, p0 * (u * u * u) + c1 * (3 * u * u * t) + c2 * (3 * u * t * t) + p3 * (t * t * t));
    }
}

void sample_quadratic(Path& path, Vec2 p0, Vec2 c, Vec2 p2)
{
    for (int i = 1; i <= kCurveSubdivisions; ++i) {
        const double t = double(i) / kCurveSubdivisions, u = 1.0 - t;
        push_point(path, p0 * (u * u) + c * (2 * u * t) + p2 * (t * t));
    }
}

// Endpoint-to-center arc conversion as described in the SVG implementation notes.
void sample_arc(Path& path, Vec2 p0, double rx, double ry, double phi_deg, bool large, bool sweep, Vec2 p1)
{
    rx = std::abs(rx);
    ry = std::abs(ry);
    if (rx == 0.0 || ry == 0.0 || p0 == p1) {
        push_point(path, p1);
        return;
    }
    const double phi = phi_deg * std::numbers::pi / 180.0;
    const double cphi = std::cos(phi), sphi = std::sin(phi);
    const double dx = (p0.x - p1.x) / 2, dy = (p0.y - p1.y) / 2;
    const double x1 = cphi * dx + sphi * dy, y1 = -sphi * dx + cphi * dy;

    const double lambda = (x1 * x1) / (rx * rx) + (y1 * y1) / (ry * ry);
    if (lambda > 1.0) {
        rx *= std::sqrt(lambda);
        ry *= std::sqrt(lambda);
    }
    const double num = rx * rx * ry * ry - rx * rx * y1 * y1 - ry * ry * x1 * x1;
    const double den = rx * rx * y1 * y1 + ry * ry * x1 * x1;
    double coef = std::sqrt(std::max(0.0, num / den));
    if (large == sweep)
        coef = -coef;
    const double cx1 = coef * rx * y1 / ry, cy1 = -coef * ry * x1 / rx;
    const double cx = cphi * cx1 - sphi * cy1 + (p0.x + p1.x) / 2;
    const double cy = sphi * cx1 + cphi * cy1 + (p0.y + p1.y) / 2;

    auto angle = [](double ux, double uy, double vx, double vy) {
        return std::atan2(ux * vy - uy * vx, ux * vx + uy * vy);
    };
    const double theta1 = angle(1, 0, (x1 - cx1) / rx, (y1 - cy1) / ry);
    double dtheta = angle((x1 - cx1) / rx, (y1 - cy1) / ry, (-x1 - cx1) / rx, (-y1 - cy1) / ry);
    if (!sweep && dtheta > 0)
        dtheta -= 2 * std::numbers::pi;
    else if (sweep && dtheta < 0)
        dtheta += 2 * std::numbers::pi;

    for (int i = 1; i <= kCurveSubdivisions; ++i) {
        const double t = theta1 + dtheta * i / kCurveSubdivisions;
        const double ex = rx * std::cos(t), ey = ry * std::sin(t);
        push_point(path, i == kCurveSubdivisions ? p1 : Vec2{cphi * ex - sphi * ey + cx, sphi * ex + cphi * ey + cy});
    }
}

Path sample_ellipse(double cx, double cy, double rx, double ry)
{
    Path path;
    for (int i = 0; i <= kCurveSubdivisions; ++i) {
        const double t = 2 * std::numbers::pi * i / kCurveSubdivisions;
        path.points.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
    }
    path.points.back() = path.points.front();
    return path;
}

std::vector<Vec2> parse_point_list(const std::string& text)
{
    PathDataReader reader(text);
    std::vector<Vec2> pts;
    while (reader.at_number())
        pts.push_back(reader.point());
    return pts;
}

std::unordered_map<std::string, std::string> parse_attributes(const std::string& tag_body)
{
    static const std::regex attr_re(R"re(([A-Za-z_:][-A-Za-z0-9_:.]*)\s*=\s*("([^"]*)"|'([^']*)'))re");
    std::unordered_map<std::string, std::string> attrs;
    for (std::sregex_iterator it(tag_body.begin(), tag_body.end(), attr_re), end; it != end; ++it)
        attrs[(*it)[1].str()] = (*it)[3].matched ? (*it)[3].str() : (*it)[4].str();
    return attrs;
}

double attr_number(const std::unordered_map<std::string, std::string>& attrs, const std::string& key)
{
    const auto it = attrs.find(key);
    if (it == attrs.end())
        return 0.0;
    return std::stod(it->second);
}

}  // namespace

std::vector<Path> parse_path_data(const std::string& d)
{
    PathDataReader reader(d);
    std::vector<Path> strokes;
    Path current;
    Vec2 cursor, start, last_ctrl;
    char prev = 0;

    auto finish = [&] {
        if (current.points.size() >= 2)
            strokes.push_back(std::move(current));
        current = Path{};
    };

    char cmd = 0;
    while (!reader.done()) {
        if (reader.at_command())
            cmd = reader.command();
        else if (cmd == 0)
            throw std::runtime_error("path data must start with a command");

        const bool rel = std::islower(static_cast<unsigned char>(cmd));
        const Vec2 base = rel ? cursor : Vec2{};
        switch (std::toupper(static_cast<unsigned char>(cmd))) {
        case 'M': {
            finish();
            cursor = base + reader.point();
            start = cursor;
            push_point(current, cursor);
            cmd = rel ? 'l' : 'L';  // further pairs are implicit line-tos
            break;
        }
        case 'L':
            cursor = base + reader.point();
            push_point(current, cursor);
            break;
        case 'H':
            cursor.x = (rel ? cursor.x : 0.0) + reader.number();
            push_point(current, cursor);
            break;
        case 'V':
            cursor.y = (rel ? cursor.y : 0.0) + reader.number();
            push_point(current, cursor);
            break;
        case 'C': {
            const Vec2 c1 = base + reader.point(), c2 = base + reader.point(), p = base + reader.point();
            if (current.points.empty())
                push_point(current, cursor);
            sample_cubic(current, cursor, c1, c2, p);
            last_ctrl = c2;
            cursor = p;
            break;
        }
        case 'S': {
            const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(prev)));
            const Vec2 c1 = (up == 'C' || up == 'S') ? cursor * 2.0 - last_ctrl : cursor;
            const Vec2 c2 = base + reader.point(), p = base + reader.point();
            if (current.points.empty())
                push_point(current, cursor);
            sample_cubic(current, cursor, c1, c2, p);
            last_ctrl = c2;
            cursor = p;
            break;
        }
        case 'Q': {
            const Vec2 c = base + reader.point(), p = base + reader.point();
            if (current.points.empty())
                push_point(current, cursor);
            sample_quadratic(current, cursor, c, p);
            last_ctrl = c;
            cursor = p;
            break;
        }
        case 'T': {
            const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(prev)));
            const Vec2 c = (up == 'Q' || up == 'T') ? cursor * 2.0 - last_ctrl : cursor;
            const Vec2 p = base + reader.point();
            if (current.points.empty())
                push_point(current, cursor);
            sample_quadratic(current, cursor, c, p);
            last_ctrl = c;
            cursor = p;
            break;
        }
        case 'A': {
            const double rx = reader.number(), ry = reader.number(), rot = reader.number();
            const bool large = reader.flag(), sweep = reader.flag();
            const Vec2 p = base + reader.point();
            if (current.points.empty())
                push_point(current, cursor);
            sample_arc(current, cursor, rx, ry, rot, large, sweep, p);
            cursor = p;
            break;
        }
        case 'Z':
            push_point(current, start);
            finish();
            cursor = start;
            break;
        default:
            throw std::runtime_error(std::string("unsupported path command '") + cmd + "'");
        }
        prev = cmd;
    }
    finish();
    return strokes;
}

std::vector<Path> load_sketch_svg(const std::string& svg_text)
{
    static const std::regex tag_re(R"(<\s*(path|polyline|polygon|line|circle|ellipse)\b([^>]*)>)");
    std::vector<Path> strokes;
    for (std::sregex_iterator it(svg_text.begin(), svg_text.end(), tag_re), end; it != end; ++it) {
        const std::string name = (*it)[1].str();
        const auto attrs = parse_attributes((*it)[2].str());

        if (name == "path") {
            if (const auto d = attrs.find("d"); d != attrs.end())
                for (auto& p : parse_path_data(d->second))
                    strokes.push_back(std::move(p));
        } else if (name == "polyline" || name == "polygon") {
            Path path;
            if (const auto pts = attrs.find("points"); pts != attrs.end())
                for (const auto& p : parse_point_list(pts->second))
                    push_point(path, p);
            if (name == "polygon" && !path.points.empty())
                push_point(path, path.points.front());
            if (path.points.size() >= 2)
                strokes.push_back(std::move(path));
        } else if (name == "line") {
            Path path;
            push_point(path, {attr_number(attrs, "x1"), attr_number(attrs, "y1")});
            push_point(path, {attr_number(attrs, "x2"), attr_number(attrs, "y2")});
            if (path.points.size() == 2)
                strokes.push_back(std::move(path));
        } else if (name == "circle") {
            const double r = attr_number(attrs, "r");
            if (r > 0)
                strokes.push_back(sample_ellipse(attr_number(attrs, "cx"), attr_number(attrs, "cy"), r, r));
        } else if (name == "ellipse") {
            const double rx = attr_number(attrs, "rx"), ry = attr_number(attrs, "ry");
            if (rx > 0 && ry > 0)
                strokes.push_back(sample_ellipse(attr_number(attrs, "cx"), attr_number(attrs, "cy"), rx, ry));
        }
    }
    return strokes;
}

std::vector<Path> load_sketch_svg_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open sketch file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_sketch_svg(ss.str());
}

}  // namespace lineportrait
