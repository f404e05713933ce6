#pragma once

#include <array>
#include <string>
#include <vector>

#include "epo/oracle.hpp"

namespace epo::gridhouse {

struct SceneConfig {
    int width = 9;
    int height = 9;
    std::vector<std::string> receptacle_pool = {"counter", "table",  "fridge", "microwave",
                                                "sink",    "drawer", "shelf"};
    std::vector<std::string> object_pool = {
        "apple", "bread", "tomato", "potato", "lettuce", "egg",    "mug",   "cup",
        "plate", "bowl",  "knife",  "fork",   "spoon",   "pan",    "pot",   "statue",
        "book",  "pen",   "phone",  "candle", "soap",    "sponge", "towel", "keys"};
    int min_distractors = 5;
    int max_distractors = 8;
    double p_closed = 0.5;       // openable receptacles starting closed
    double noise_prob = 0.3;     // instruction alias-noise probability
    int step_budget = 200;
    std::vector<std::uint64_t> layout_seeds = {11, 12, 13, 14, 15, 16, 17, 18};
    int forced_template = -1;    // index into kTemplateNames, or -1 for random
};

namespace detail {

inline std::vector<int> pool_kinds(const std::vector<std::string>& names, bool receptacles) {
    std::vector<int> kinds;
    for (const auto& n : names) {
        int k = kind_from_name(n);
        if (k < 0 || is_receptacle_kind(k) != receptacles)
            throw ConfigError("unknown " + std::string(receptacles ? "receptacle" : "object") +
                              " kind in pool: " + n);
        kinds.push_back(k);
    }
    return kinds;
}

inline bool layout_valid(const Scene& scene) {
    // every receptacle needs a free orthogonal neighbor, and the free cells
    // must form one connected component
    constexpr int dx[4] = {0, 1, 0, -1};
    constexpr int dy[4] = {-1, 0, 1, 0};
    for (const auto& r : scene.receptacles) {
        bool ok = false;
        for (int k = 0; k < 4; ++k)
            if (scene.cell_free(r.x + dx[k], r.y + dy[k])) ok = true;
        if (!ok) return false;
    }
    int first_free = -1;
    int n_free = 0;
    for (int y = 0; y < scene.height; ++y)
        for (int x = 0; x < scene.width; ++x)
            if (scene.cell_free(x, y)) {
                ++n_free;
                if (first_free < 0) first_free = y * scene.width + x;
            }
    if (first_free < 0) return false;
    std::vector<bool> seen(std::size_t(scene.width * scene.height), false);
    std::vector<int> stack{first_free};
    seen[std::size_t(first_free)] = true;
    int visited = 0;
    while (!stack.empty()) {
        int cell = stack.back();
        stack.pop_back();
        ++visited;
        int x = cell % scene.width, y = cell / scene.width;
        for (int k = 0; k < 4; ++k) {
            int nx = x + dx[k], ny = y + dy[k];
            if (!scene.cell_free(nx, ny)) continue;
            std::size_t idx = std::size_t(ny * scene.width + nx);
            if (seen[idx]) continue;
            seen[idx] = true;
            stack.push_back(int(ny * scene.width + nx));
        }
    }
    return visited == n_free;
}

inline void place_receptacles(Scene& scene, const std::vector<int>& kinds, Rng& layout_rng) {
    for (int attempt = 0; attempt < 500; ++attempt) {
        scene.receptacles.clear();
        bool clash = false;
        for (int kind : kinds) {
            for (int tries = 0;; ++tries) {
                if (tries >= 200) {
                    clash = true;
                    break;
                }
                int x = int(layout_rng.uniform_int(std::uint64_t(scene.width)));
                int y = int(layout_rng.uniform_int(std::uint64_t(scene.height)));
                if (scene.receptacle_at(x, y) >= 0) continue;
                scene.receptacles.push_back({kind, x, y, false, false});
                break;
            }
            if (clash) break;
        }
        if (!clash && layout_valid(scene)) return;
    }
    throw ConfigError("could not place receptacles on the grid");
}

inline std::string place_word(int rkind) {
    const auto& spec = receptacle_spec(rkind);
    if (spec.openable || spec.toggleable) return "in";
    return "on";
}

// Step text for one subgoal group of the skeleton.
inline std::vector<std::string> step_text_for(const std::vector<Subgoal>& group,
                                              const std::string& obj_word) {
    auto rword = [](int kind) { return kind_name(kind); };
    if (group.size() == 2)  // Moveto + Pickup
        return {"pick", "up", "the", obj_word, "from", "the", rword(group[0].target)};
    const Subgoal& sg = group[0];
    switch (sg.type) {
        case SubgoalType::Moveto:
            return {"go", "to", "the", rword(sg.target)};
        case SubgoalType::Pickup:
            return {"pick", "up", "the", obj_word};
        case SubgoalType::Put:
            return {"put", "the", obj_word, place_word(sg.target), "the", rword(sg.target)};
        case SubgoalType::Heat:
            return {"heat", "the", obj_word, "in", "the", "microwave"};
        case SubgoalType::Cool:
            return {"chill", "the", obj_word, "in", "the", "fridge"};
        case SubgoalType::Clean:
            return {"wash", "the", obj_word, "in", "the", "sink"};
        case SubgoalType::Slice:
            return {"slice", "the", obj_word};
        default:
            return {"do", "the", kSubgoalNames[int(sg.type)]};
    }
}

inline std::vector<std::string> goal_text_for(const Task& task, const std::string& obj_word) {
    std::string place = place_word(task.dest_rkind);
    std::string dest = kind_name(task.dest_rkind);
    switch (task.tmpl) {
        case TaskTemplate::pick_and_place:
            return {"put", "the", obj_word, place, "the", dest};
        case TaskTemplate::pick_two_and_place:
            return {"put", "two", obj_word, place, "the", dest};
        case TaskTemplate::heat_then_place:
            return {"heat", "the", obj_word, "and", "put", "it", place, "the", dest};
        case TaskTemplate::cool_then_place:
            return {"chill", "the", obj_word, "and", "put", "it", place, "the", dest};
        case TaskTemplate::clean_then_place:
            return {"wash", "the", obj_word, "and", "put", "it", place, "the", dest};
        case TaskTemplate::slice_and_place:
            return {"slice", "the", obj_word, "and", "put", "it", place, "the", dest};
    }
    return {};
}

}  // namespace detail

// Deterministic scene + task generation. Same (seed, config) yields a
// field-for-field identical result.
inline std::pair<Scene, Task> generate_scene(std::uint64_t seed, const SceneConfig& config) {
    if (config.width < 5 || config.height < 5)
        throw ConfigError("grid must be at least 5x5");
    if (config.receptacle_pool.empty() || config.object_pool.empty())
        throw ConfigError("kind pools must be non-empty");
    if (config.layout_seeds.empty()) throw ConfigError("layout seed pool must be non-empty");

    std::vector<int> rkinds = detail::pool_kinds(config.receptacle_pool, true);
    std::vector<int> okinds = detail::pool_kinds(config.object_pool, false);

    Rng rng(seed);
    std::uint64_t layout_seed = config.layout_seeds[std::size_t(
        rng.uniform_int(config.layout_seeds.size()))];
    Rng layout_rng(layout_seed);

    Scene scene;
    scene.width = config.width;
    scene.height = config.height;
    scene.rng_seed = seed;
    detail::place_receptacles(scene, rkinds, layout_rng);

    // --- task template ---
    TaskTemplate tmpl = config.forced_template >= 0
                            ? TaskTemplate(config.forced_template)
                            : TaskTemplate(rng.uniform_int(kNumTaskTemplates));
    auto require_receptacle = [&](const char* name) {
        int k = kind_from_name(name);
        for (int rk : rkinds)
            if (rk == k) return;
        throw ConfigError(std::string("template ") + kTemplateNames[int(tmpl)] +
                          " requires receptacle kind " + name);
    };
    if (tmpl == TaskTemplate::heat_then_place) require_receptacle("microwave");
    if (tmpl == TaskTemplate::cool_then_place) require_receptacle("fridge");
    if (tmpl == TaskTemplate::clean_then_place) require_receptacle("sink");
    if (rkinds.size() < 2) throw ConfigError("need at least two receptacle kinds");

    // --- target kind ---
    std::vector<int> target_candidates;
    for (int k : okinds)
        if (tmpl != TaskTemplate::slice_and_place || is_sliceable(k)) target_candidates.push_back(k);
    if (target_candidates.empty())
        throw ConfigError(std::string("no eligible target object for template ") +
                          kTemplateNames[int(tmpl)]);
    int target_kind = target_candidates[std::size_t(rng.uniform_int(target_candidates.size()))];

    // --- destination: exclude the appliance the template occupies ---
    int excluded = -1;
    if (tmpl == TaskTemplate::heat_then_place) excluded = kind_from_name("microwave");
    if (tmpl == TaskTemplate::cool_then_place) excluded = kind_from_name("fridge");
    if (tmpl == TaskTemplate::clean_then_place) excluded = kind_from_name("sink");
    std::vector<int> dest_candidates;
    for (int rk : rkinds)
        if (rk != excluded) dest_candidates.push_back(rk);
    int dest_rkind = dest_candidates[std::size_t(rng.uniform_int(dest_candidates.size()))];

    // --- place target instances, never starting at the destination ---
    std::vector<int> src_candidates;
    for (std::size_t i = 0; i < scene.receptacles.size(); ++i)
        if (scene.receptacles[i].kind != dest_rkind) src_candidates.push_back(int(i));
    int n_targets = tmpl == TaskTemplate::pick_two_and_place ? 2 : 1;
    for (int i = 0; i < n_targets; ++i) {
        int src = src_candidates[std::size_t(rng.uniform_int(src_candidates.size()))];
        scene.objects.push_back({target_kind, src});
    }

    // --- distractor objects (distinct kinds, one member per alias group) ---
    std::vector<bool> group_used(kAliasGroups.size(), false);
    if (int g = alias_group_of(target_kind); g >= 0) group_used[std::size_t(g)] = true;
    std::vector<int> distractor_pool;
    for (int k : okinds)
        if (k != target_kind) distractor_pool.push_back(k);
    rng.shuffle(distractor_pool);
    int span = config.max_distractors - config.min_distractors + 1;
    int n_distractors = config.min_distractors + int(rng.uniform_int(std::uint64_t(span)));
    int placed = 0;
    for (int k : distractor_pool) {
        if (placed >= n_distractors) break;
        int g = alias_group_of(k);
        if (g >= 0) {
            if (group_used[std::size_t(g)]) continue;
            group_used[std::size_t(g)] = true;
        }
        int loc = int(rng.uniform_int(scene.receptacles.size()));
        scene.objects.push_back({k, loc});
        ++placed;
    }

    // --- receptacle initial states ---
    for (auto& r : scene.receptacles)
        if (receptacle_spec(r.kind).openable) r.is_open = !rng.bernoulli(config.p_closed);

    // --- agent pose ---
    std::vector<std::pair<int, int>> free_cells;
    for (int y = 0; y < scene.height; ++y)
        for (int x = 0; x < scene.width; ++x)
            if (scene.cell_free(x, y)) free_cells.emplace_back(x, y);
    auto [ax, ay] = free_cells[std::size_t(rng.uniform_int(free_cells.size()))];
    scene.agent = {ax, ay, Dir(rng.uniform_int(4)), Pitch::Level};

    // --- task ---
    Task task;
    task.tmpl = tmpl;
    task.step_budget = config.step_budget;
    task.target_kind = target_kind;
    task.dest_rkind = dest_rkind;
    task.combined_steps = rng.bernoulli(0.5);

    Predicate picked{Predicate::Type::Picked, target_kind};
    Predicate placed_one{Predicate::Type::Placed, target_kind, StateFlag::heated, false,
                         dest_rkind, 1};
    auto flagged = [&](StateFlag f) {
        Predicate st{Predicate::Type::State, target_kind, f, false, -1, 1};
        Predicate pl{Predicate::Type::Placed, target_kind, f, true, dest_rkind, 1};
        return std::pair{st, pl};
    };
    switch (tmpl) {
        case TaskTemplate::pick_and_place:
            task.goal_conditions = {picked, placed_one};
            break;
        case TaskTemplate::pick_two_and_place: {
            Predicate placed_two = placed_one;
            placed_two.min_count = 2;
            task.goal_conditions = {picked, placed_one, placed_two};
            break;
        }
        case TaskTemplate::heat_then_place: {
            auto [st, pl] = flagged(StateFlag::heated);
            task.goal_conditions = {picked, st, pl};
            break;
        }
        case TaskTemplate::cool_then_place: {
            auto [st, pl] = flagged(StateFlag::cooled);
            task.goal_conditions = {picked, st, pl};
            break;
        }
        case TaskTemplate::clean_then_place: {
            auto [st, pl] = flagged(StateFlag::cleaned);
            task.goal_conditions = {picked, st, pl};
            break;
        }
        case TaskTemplate::slice_and_place: {
            auto [st, pl] = flagged(StateFlag::sliced);
            task.goal_conditions = {st, picked, pl};
            break;
        }
    }

    // --- instruction text, with optional alias noise on the target mention ---
    std::string obj_word = kind_name(target_kind);
    const char* alias = alias_for_kind(obj_word);
    bool noise = alias != nullptr && rng.bernoulli(config.noise_prob);
    if (noise) obj_word = alias;

    task.instruction.noise_applied = noise;
    task.instruction.goal_text = detail::goal_text_for(task, obj_word);
    for (const auto& group : subgoal_skeleton(scene, task))
        task.instruction.step_texts.push_back(detail::step_text_for(group, obj_word));

    return {scene, task};
}

}  // namespace epo::gridhouse
