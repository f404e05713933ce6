#pragma once

#include <deque>
#include <map>
#include <vector>

#include "epo/gridhouse.hpp"

namespace epo::gridhouse {

// Pose from which an interaction with some kind is known to succeed.
struct Viewpoint {
    int x, y;
    Dir r;
    Pitch h;

    auto operator<=>(const Viewpoint&) const = default;
};

struct ViewpointMap {
    std::map<int, std::vector<Viewpoint>> entries;  // kind -> sorted viewpoints

    bool has(int kind) const { return entries.count(kind) > 0; }
    std::vector<int> kinds() const {
        std::vector<int> ks;
        for (const auto& [k, _] : entries) ks.push_back(k);
        return ks;
    }
};

namespace detail {

inline std::vector<bool> reachable_cells(const Scene& scene) {
    std::vector<bool> seen(std::size_t(scene.width * scene.height), false);
    std::deque<std::pair<int, int>> frontier;
    frontier.emplace_back(scene.agent.x, scene.agent.y);
    seen[std::size_t(scene.agent.y * scene.width + scene.agent.x)] = true;
    while (!frontier.empty()) {
        auto [x, y] = frontier.front();
        frontier.pop_front();
        constexpr int dx[4] = {0, 1, 0, -1};
        constexpr int dy[4] = {-1, 0, 1, 0};
        for (int k = 0; k < 4; ++k) {
            int nx = x + dx[k], ny = y + dy[k];
            if (!scene.cell_free(nx, ny)) continue;
            std::size_t idx = std::size_t(ny * scene.width + nx);
            if (seen[idx]) continue;
            seen[idx] = true;
            frontier.emplace_back(nx, ny);
        }
    }
    return seen;
}

}  // namespace detail

// Systematic sweep over every reachable pose. At each pose the explorer
// probes interactions with whatever is in front of it, opening closed
// receptacles to inspect their contents; the input scene is left untouched.
inline ViewpointMap explore(const Scene& scene) {
    ViewpointMap map;
    auto reachable = detail::reachable_cells(scene);
    for (int y = 0; y < scene.height; ++y) {
        for (int x = 0; x < scene.width; ++x) {
            if (!reachable[std::size_t(y * scene.width + x)]) continue;
            for (int ri = 0; ri < 4; ++ri) {
                for (int hi = 0; hi < 2; ++hi) {
                    AgentPose pose{x, y, Dir(ri), Pitch(hi)};
                    int fr = detail::facing_receptacle(scene, pose);
                    if (fr < 0) continue;
                    const auto& rec = scene.receptacles[std::size_t(fr)];
                    Viewpoint vp{x, y, pose.r, pose.h};
                    map.entries[rec.kind].push_back(vp);
                    for (const auto& obj : scene.objects)
                        if (obj.location == fr) map.entries[obj.kind].push_back(vp);
                }
            }
        }
    }
    for (auto& [kind, vps] : map.entries) {
        std::sort(vps.begin(), vps.end());
        vps.erase(std::unique(vps.begin(), vps.end()), vps.end());
    }
    return map;
}

// Shortest MoveAhead/Rotate/Look sequence from the agent pose to the nearest
// recorded viewpoint for target_kind. Ties broken by lowest (x, y, r, h).
inline std::vector<LowLevelAction> navigate(const Scene& scene, int target_kind,
                                            const ViewpointMap& vmap) {
    auto it = vmap.entries.find(target_kind);
    if (it == vmap.entries.end() || it->second.empty())
        throw NavError("no recorded viewpoint for kind " + kind_name(target_kind));

    const int W = scene.width, H = scene.height;
    auto encode = [W](int x, int y, int r, int h) { return ((y * W + x) * 4 + r) * 2 + h; };
    const int n_nodes = W * H * 4 * 2;
    std::vector<int> dist(std::size_t(n_nodes), -1);
    std::vector<int> parent(std::size_t(n_nodes), -1);
    std::vector<LowLevelAction> via{std::size_t(n_nodes), LowLevelAction{}};

    int start = encode(scene.agent.x, scene.agent.y, int(scene.agent.r), int(scene.agent.h));
    dist[std::size_t(start)] = 0;
    std::deque<int> frontier{start};
    while (!frontier.empty()) {
        int node = frontier.front();
        frontier.pop_front();
        int h = node % 2, r = (node / 2) % 4, cell = node / 8;
        int x = cell % W, y = cell / W;

        auto relax = [&](int nx, int ny, int nr, int nh, LowLevelAction a) {
            int next = encode(nx, ny, nr, nh);
            if (dist[std::size_t(next)] >= 0) return;
            dist[std::size_t(next)] = dist[std::size_t(node)] + 1;
            parent[std::size_t(next)] = node;
            via[std::size_t(next)] = a;
            frontier.push_back(next);
        };

        int ax = x + dx_of(Dir(r)), ay = y + dy_of(Dir(r));
        if (scene.cell_free(ax, ay)) relax(ax, ay, r, h, {ActionType::MoveAhead, -1});
        relax(x, y, (r + 3) % 4, h, {ActionType::RotateLeft, -1});
        relax(x, y, (r + 1) % 4, h, {ActionType::RotateRight, -1});
        if (h == int(Pitch::Down)) relax(x, y, r, int(Pitch::Level), {ActionType::LookUp, -1});
        if (h == int(Pitch::Level)) relax(x, y, r, int(Pitch::Down), {ActionType::LookDown, -1});
    }

    int best = -1, best_dist = -1;
    for (const auto& vp : it->second) {
        int node = encode(vp.x, vp.y, int(vp.r), int(vp.h));
        int d = dist[std::size_t(node)];
        if (d < 0) continue;
        if (best < 0 || d < best_dist) {
            best = node;
            best_dist = d;
        }
        // viewpoints are pre-sorted, so the first hit at min distance wins
    }
    if (best < 0) throw NavError("no reachable viewpoint for kind " + kind_name(target_kind));

    std::vector<LowLevelAction> path;
    for (int node = best; node != start; node = parent[std::size_t(node)])
        path.push_back(via[std::size_t(node)]);
    std::reverse(path.begin(), path.end());
    return path;
}

// Kinds seen from at least one reachable pose without opening anything:
// the "object detector sweep" summary used as visual feedback.
inline std::vector<std::string> detected_kinds(const Scene& scene) {
    auto reachable = detail::reachable_cells(scene);
    std::vector<std::string> names;
    Scene probe = scene;
    for (int y = 0; y < scene.height; ++y) {
        for (int x = 0; x < scene.width; ++x) {
            if (!reachable[std::size_t(y * scene.width + x)]) continue;
            for (int r = 0; r < 4; ++r) {
                for (int h = 0; h < 2; ++h) {
                    probe.agent = {x, y, Dir(r), Pitch(h)};
                    for (auto& n : visible_objects(probe)) names.push_back(std::move(n));
                }
            }
        }
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

// Kinds with at least one recorded viewpoint: the interaction-verified
// summary (contents of openable receptacles included).
inline std::vector<std::string> interactable_kinds(const Scene& scene, const ViewpointMap& vmap) {
    (void)scene;
    std::vector<std::string> names;
    for (const auto& [kind, _] : vmap.entries) names.push_back(kind_name(kind));
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace epo::gridhouse
