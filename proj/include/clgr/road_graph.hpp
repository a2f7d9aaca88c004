#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "clgr/common.hpp"

namespace clgr {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double dist(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

struct RoadEdge {
    std::string from;
    std::string to;
    double width = 3.5;
    std::vector<Vec2> polyline;  // includes both node endpoints
    double length = 0.0;
};

/// A densified waypoint path. Waypoints are spaced ~2 m along lane polylines;
/// `cum[i]` is the arc length up to waypoint i.
struct Route {
    std::vector<Vec2> pts;
    std::vector<double> cum;

    double length() const { return cum.empty() ? 0.0 : cum.back(); }

    struct Projection {
        double s = 0.0;        // arc length of the closest point
        double lateral = 0.0;  // signed offset, left of travel negative
        double heading = 0.0;  // tangent heading at the closest segment
        int seg = 0;           // closest segment index
    };

    /// Projects `p` onto the path, searching near `hint_seg` first so that a
    /// vehicle making forward progress is matched in O(1).
    Projection project(const Vec2& p, int hint_seg = 0) const {
        Projection best;
        if (pts.size() < 2) {
            best.lateral = pts.empty() ? 0.0 : dist(p, pts[0]);
            return best;
        }
        const int nseg = static_cast<int>(pts.size()) - 1;
        const int lo = std::max(0, hint_seg - 8);
        const int hi = std::min(nseg - 1, hint_seg + 60);
        double best_d2 = 1e300;
        double best_t = 0.0;
        for (int pass = 0; pass < 2; ++pass) {
            const int a = pass == 0 ? lo : 0;
            const int b = pass == 0 ? hi : nseg - 1;
            for (int i = a; i <= b; ++i) {
                const Vec2& p0 = pts[static_cast<std::size_t>(i)];
                const Vec2& p1 = pts[static_cast<std::size_t>(i) + 1];
                const double dx = p1.x - p0.x, dy = p1.y - p0.y;
                const double len2 = dx * dx + dy * dy;
                double t = len2 > 0.0 ? ((p.x - p0.x) * dx + (p.y - p0.y) * dy) / len2 : 0.0;
                t = clamp(t, 0.0, 1.0);
                const double cx = p0.x + t * dx, cy = p0.y + t * dy;
                const double d2 = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
                if (d2 < best_d2 - 1e-12) {
                    best_d2 = d2;
                    best.seg = i;
                    best_t = t;
                }
            }
            // Fall back to a full scan only if the local window missed badly.
            if (pass == 0 && best_d2 < 25.0) break;
        }
        const Vec2& p0 = pts[static_cast<std::size_t>(best.seg)];
        const Vec2& p1 = pts[static_cast<std::size_t>(best.seg) + 1];
        const double dx = p1.x - p0.x, dy = p1.y - p0.y;
        const double seglen = std::sqrt(dx * dx + dy * dy);
        best.heading = std::atan2(dy, dx);
        best.s = cum[static_cast<std::size_t>(best.seg)] + best_t * seglen;
        // signed offset: positive to the right of the direction of travel
        const double cx = p0.x + best_t * dx, cy = p0.y + best_t * dy;
        const double nx = dy / (seglen > 0.0 ? seglen : 1.0);
        const double ny = -dx / (seglen > 0.0 ? seglen : 1.0);
        best.lateral = (p.x - cx) * nx + (p.y - cy) * ny;
        return best;
    }

    Vec2 point_at(double s) const {
        if (pts.empty()) return {};
        if (s <= 0.0) return pts.front();
        if (s >= length()) return pts.back();
        auto it = std::upper_bound(cum.begin(), cum.end(), s);
        const int i = static_cast<int>(it - cum.begin()) - 1;
        const double t = (s - cum[static_cast<std::size_t>(i)]) /
                         (cum[static_cast<std::size_t>(i) + 1] - cum[static_cast<std::size_t>(i)]);
        const Vec2& a = pts[static_cast<std::size_t>(i)];
        const Vec2& b = pts[static_cast<std::size_t>(i) + 1];
        return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    }

    double heading_at(double s) const {
        if (pts.size() < 2) return 0.0;
        auto it = std::upper_bound(cum.begin(), cum.end(), std::min(s, length() - 1e-9));
        int i = static_cast<int>(it - cum.begin()) - 1;
        i = std::max(0, std::min(i, static_cast<int>(pts.size()) - 2));
        const Vec2& a = pts[static_cast<std::size_t>(i)];
        const Vec2& b = pts[static_cast<std::size_t>(i) + 1];
        return std::atan2(b.y - a.y, b.x - a.x);
    }
};

/// Directed lane-level road network loaded from the structured-text map file.
///
/// File schema, one statement per line ('#' starts a comment line):
///   lane_width <meters>
///   node <id> <x> <y>
///   edge <from> <to> [width <meters>] poly <x1> <y1> <x2> <y2> ...
///   spawn <id> [<id> ...]
class RoadGraph {
public:
    double lane_width = 3.5;
    std::map<std::string, Vec2> nodes;
    std::vector<RoadEdge> edges;
    std::vector<std::string> spawn_points;

    const std::vector<int>& out_edges(const std::string& node) const {
        static const std::vector<int> empty;
        auto it = out_.find(node);
        return it == out_.end() ? empty : it->second;
    }

    const RoadEdge& edge(int i) const { return edges[static_cast<std::size_t>(i)]; }

    void add_node(const std::string& id, Vec2 p) { nodes[id] = p; }

    void add_edge(RoadEdge e) {
        if (!nodes.count(e.from) || !nodes.count(e.to))
            throw DataError("edge references unknown node " +
                            (nodes.count(e.from) ? e.to : e.from));
        if (e.polyline.empty()) {
            e.polyline = {nodes[e.from], nodes[e.to]};
        }
        e.length = 0.0;
        for (std::size_t i = 1; i < e.polyline.size(); ++i)
            e.length += dist(e.polyline[i - 1], e.polyline[i]);
        out_[e.from].push_back(static_cast<int>(edges.size()));
        edges.push_back(std::move(e));
    }

    void validate() const {
        for (const RoadEdge& e : edges) {
            if (dist(e.polyline.front(), nodes.at(e.from)) > 1e-6 ||
                dist(e.polyline.back(), nodes.at(e.to)) > 1e-6)
                throw DataError("edge " + e.from + "->" + e.to +
                                " polyline endpoints do not coincide with its nodes");
        }
        if (spawn_points.size() >= 2) {
            for (const std::string& s : spawn_points)
                if (!nodes.count(s)) throw DataError("spawn point references unknown node " + s);
            // strong connectivity over spawn points: every spawn reaches and
            // is reached by spawn_points[0]
            auto reach = [&](bool forward) {
                std::set<std::string> seen{spawn_points[0]};
                std::queue<std::string> q;
                q.push(spawn_points[0]);
                while (!q.empty()) {
                    std::string n = q.front();
                    q.pop();
                    for (const RoadEdge& e : edges) {
                        const std::string& a = forward ? e.from : e.to;
                        const std::string& b = forward ? e.to : e.from;
                        if (a == n && !seen.count(b)) {
                            seen.insert(b);
                            q.push(b);
                        }
                    }
                }
                return seen;
            };
            auto fwd = reach(true);
            auto bwd = reach(false);
            for (const std::string& s : spawn_points)
                if (!fwd.count(s) || !bwd.count(s))
                    throw DataError("spawn points are not strongly connected (offender: " + s + ")");
        }
    }

    static RoadGraph load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw DataError("cannot open map file: " + path);
        RoadGraph g;
        std::string line;
        int lineno = 0;
        std::vector<std::tuple<std::string, std::string, double, std::vector<Vec2>>> pending_edges;
        while (std::getline(f, line)) {
            ++lineno;
            std::istringstream ss(line);
            std::string kw;
            if (!(ss >> kw) || kw[0] == '#') continue;
            auto fail = [&](const std::string& why) {
                throw DataError(path + ":" + std::to_string(lineno) + ": " + why);
            };
            if (kw == "lane_width") {
                if (!(ss >> g.lane_width)) fail("lane_width needs a value");
            } else if (kw == "node") {
                std::string id;
                Vec2 p;
                if (!(ss >> id >> p.x >> p.y)) fail("node needs: id x y");
                g.add_node(id, p);
            } else if (kw == "edge") {
                std::string from, to, tok;
                if (!(ss >> from >> to)) fail("edge needs: from to [width w] poly ...");
                double width = -1.0;
                std::vector<Vec2> poly;
                while (ss >> tok) {
                    if (tok == "width") {
                        if (!(ss >> width)) fail("edge width needs a value");
                    } else if (tok == "poly") {
                        double x, y;
                        while (ss >> x >> y) poly.push_back({x, y});
                    } else {
                        fail("unexpected token \"" + tok + "\" in edge");
                    }
                }
                pending_edges.emplace_back(from, to, width, std::move(poly));
            } else if (kw == "spawn") {
                std::string id;
                while (ss >> id) g.spawn_points.push_back(id);
            } else {
                fail("unknown keyword \"" + kw + "\"");
            }
        }
        for (auto& [from, to, width, poly] : pending_edges) {
            RoadEdge e;
            e.from = from;
            e.to = to;
            e.width = width > 0.0 ? width : g.lane_width;
            e.polyline = std::move(poly);
            g.add_edge(std::move(e));
        }
        g.validate();
        return g;
    }

    /// A* over nodes: cost = lane arc length, heuristic = straight-line
    /// distance (admissible since polylines are at least as long).
    std::vector<std::string> plan_route(const std::string& start, const std::string& goal) const {
        if (!nodes.count(start)) throw DataError("plan_route: unknown start node " + start);
        if (!nodes.count(goal)) throw DataError("plan_route: unknown goal node " + goal);
        if (start == goal) return {start};

        const Vec2 goal_p = nodes.at(goal);
        std::map<std::string, double> g_cost;
        std::map<std::string, std::string> came;
        using Item = std::pair<double, std::string>;  // (f, node)
        std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
        g_cost[start] = 0.0;
        open.emplace(dist(nodes.at(start), goal_p), start);
        while (!open.empty()) {
            auto [f, n] = open.top();
            open.pop();
            if (n == goal) break;
            const double gn = g_cost.at(n);
            if (f - dist(nodes.at(n), goal_p) > gn + 1e-9) continue;  // stale entry
            for (int ei : out_edges(n)) {
                const RoadEdge& e = edges[static_cast<std::size_t>(ei)];
                const double cand = gn + e.length;
                auto it = g_cost.find(e.to);
                if (it == g_cost.end() || cand < it->second - 1e-12) {
                    g_cost[e.to] = cand;
                    came[e.to] = n;
                    open.emplace(cand + dist(nodes.at(e.to), goal_p), e.to);
                }
            }
        }
        if (!g_cost.count(goal))
            throw DataError("plan_route: goal " + goal + " unreachable from " + start);
        std::vector<std::string> path{goal};
        while (path.back() != start) path.push_back(came.at(path.back()));
        std::reverse(path.begin(), path.end());
        return path;
    }

    double path_cost(const std::vector<std::string>& path) const {
        double c = 0.0;
        for (std::size_t i = 1; i < path.size(); ++i) {
            const int ei = find_edge(path[i - 1], path[i]);
            if (ei < 0) throw DataError("path_cost: no edge " + path[i - 1] + "->" + path[i]);
            c += edges[static_cast<std::size_t>(ei)].length;
        }
        return c;
    }

    int find_edge(const std::string& from, const std::string& to) const {
        for (int ei : out_edges(from))
            if (edges[static_cast<std::size_t>(ei)].to == to) return ei;
        return -1;
    }

    /// Densifies a node path into waypoints every `spacing` meters.
    Route densify(const std::vector<std::string>& path, double spacing = 2.0) const {
        Route r;
        if (path.empty()) return r;
        if (path.size() == 1) {
            r.pts = {nodes.at(path[0])};
            r.cum = {0.0};
            return r;
        }
        // Concatenate polylines, dropping each edge's duplicated first vertex.
        std::vector<Vec2> chain;
        for (std::size_t i = 1; i < path.size(); ++i) {
            const int ei = find_edge(path[i - 1], path[i]);
            if (ei < 0) throw DataError("densify: no edge " + path[i - 1] + "->" + path[i]);
            const auto& poly = edges[static_cast<std::size_t>(ei)].polyline;
            const std::size_t begin = chain.empty() ? 0 : 1;
            for (std::size_t j = begin; j < poly.size(); ++j) chain.push_back(poly[j]);
        }
        // Walk the chain emitting points at multiples of `spacing`.
        double total = 0.0;
        for (std::size_t i = 1; i < chain.size(); ++i) total += dist(chain[i - 1], chain[i]);
        r.pts.push_back(chain.front());
        r.cum.push_back(0.0);
        double walked = 0.0, next = spacing;
        for (std::size_t i = 1; i < chain.size(); ++i) {
            const double seg = dist(chain[i - 1], chain[i]);
            if (seg <= 1e-12) continue;
            while (next < walked + seg - 1e-9 && next < total - spacing * 0.5) {
                const double t = (next - walked) / seg;
                r.pts.push_back({chain[i - 1].x + t * (chain[i].x - chain[i - 1].x),
                                 chain[i - 1].y + t * (chain[i].y - chain[i - 1].y)});
                r.cum.push_back(next);
                next += spacing;
            }
            walked += seg;
        }
        r.pts.push_back(chain.back());
        r.cum.push_back(total);
        return r;
    }

private:
    std::map<std::string, std::vector<int>> out_;
};

}  // namespace clgr
