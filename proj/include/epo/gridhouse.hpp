#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epo/util.hpp"

namespace epo::gridhouse {

// ---------------------------------------------------------------------------
// Kinds. One flat id space: receptacle kinds first, then object kinds.
// ---------------------------------------------------------------------------

struct ReceptacleSpec {
    const char* name;
    bool openable;
    bool toggleable;
    bool low;  // requires camera pitch Down to see/interact
};

inline constexpr std::array<ReceptacleSpec, 7> kReceptacleSpecs = {{
    {"counter", false, false, false},
    {"table", false, false, false},
    {"fridge", true, false, false},
    {"microwave", true, true, false},
    {"sink", false, true, true},
    {"drawer", true, false, true},
    {"shelf", false, false, false},
}};

inline constexpr std::array<const char*, 24> kObjectNames = {
    "apple", "bread",  "tomato", "potato", "lettuce", "egg",   "mug",  "cup",
    "plate", "bowl",   "knife",  "fork",   "spoon",   "pan",   "pot",  "statue",
    "book",  "pen",    "phone",  "candle", "soap",    "sponge", "towel", "keys",
};

inline constexpr std::array<const char*, 5> kSliceableNames = {
    "apple", "bread", "tomato", "potato", "lettuce"};

inline constexpr int kNumReceptacleKinds = int(kReceptacleSpecs.size());
inline constexpr int kNumObjectKinds = int(kObjectNames.size());
inline constexpr int kNumKinds = kNumReceptacleKinds + kNumObjectKinds;
inline constexpr int kSlicePieces = 2;  // pieces produced by one Slice

inline bool is_receptacle_kind(int kind) { return kind >= 0 && kind < kNumReceptacleKinds; }
inline bool is_object_kind(int kind) { return kind >= kNumReceptacleKinds && kind < kNumKinds; }

inline const ReceptacleSpec& receptacle_spec(int kind) { return kReceptacleSpecs[std::size_t(kind)]; }

inline std::string kind_name(int kind) {
    if (is_receptacle_kind(kind)) return kReceptacleSpecs[std::size_t(kind)].name;
    if (is_object_kind(kind)) return kObjectNames[std::size_t(kind - kNumReceptacleKinds)];
    return "?";
}

inline int kind_from_name(const std::string& name) {
    for (int i = 0; i < kNumReceptacleKinds; ++i)
        if (name == kReceptacleSpecs[std::size_t(i)].name) return i;
    for (int i = 0; i < kNumObjectKinds; ++i)
        if (name == kObjectNames[std::size_t(i)]) return kNumReceptacleKinds + i;
    return -1;
}

inline bool is_sliceable(int kind) {
    if (!is_object_kind(kind)) return false;
    for (const char* n : kSliceableNames)
        if (kind_name(kind) == n) return true;
    return false;
}

// Instruction aliasing: an alias word that may stand in for either kind of
// its group ("the figure" may mean the statue or the candle). Scenes never
// contain both members of a group, so environment feedback disambiguates.
struct AliasGroup {
    const char* alias;
    std::array<const char*, 2> kinds;
};

inline constexpr std::array<AliasGroup, 4> kAliasGroups = {{
    {"figure", {"statue", "candle"}},
    {"disc", {"plate", "bowl"}},
    {"tool", {"fork", "spoon"}},
    {"block", {"book", "soap"}},
}};

inline const char* alias_for_kind(const std::string& kind) {
    for (const auto& g : kAliasGroups)
        for (const char* k : g.kinds)
            if (kind == k) return g.alias;
    return nullptr;
}

inline int alias_group_of(int kind) {
    for (std::size_t g = 0; g < kAliasGroups.size(); ++g)
        for (const char* k : kAliasGroups[g].kinds)
            if (kind_name(kind) == k) return int(g);
    return -1;
}

// ---------------------------------------------------------------------------
// Actions and subgoals
// ---------------------------------------------------------------------------

enum class ActionType {
    MoveAhead,
    RotateLeft,
    RotateRight,
    LookUp,
    LookDown,
    Pickup,
    Put,
    Open,
    Close,
    ToggleOn,
    ToggleOff,
    Slice,
};
inline constexpr int kNumActionTypes = 12;
inline constexpr int kNumUntargetedActions = 5;  // the navigation/camera types

inline constexpr std::array<const char*, 12> kActionNames = {
    "MoveAhead", "RotateLeft", "RotateRight", "LookUp",   "LookDown",  "Pickup",
    "Put",       "Open",       "Close",       "ToggleOn", "ToggleOff", "Slice"};

inline bool action_takes_target(ActionType t) { return int(t) >= kNumUntargetedActions; }

enum class SubgoalType {
    Moveto,
    Pickup,
    Put,
    Open,
    Close,
    Heat,
    Cool,
    Clean,
    Slice,
    ToggleOn,
};
inline constexpr int kNumSubgoalTypes = 10;

inline constexpr std::array<const char*, 10> kSubgoalNames = {
    "Moveto", "Pickup", "Put", "Open", "Close", "Heat", "Cool", "Clean", "Slice", "ToggleOn"};

// target: kind id, or -1 for the untargeted navigation/camera actions.
struct LowLevelAction {
    ActionType type;
    int target = -1;

    bool operator==(const LowLevelAction&) const = default;
};

// Subgoals are always fully parameterized.
struct Subgoal {
    SubgoalType type;
    int target;

    bool operator==(const Subgoal&) const = default;
};

enum class Reason {
    ok,
    not_visible,
    too_far,
    receptacle_closed,
    inventory_full,
    inventory_empty,
    invalid_target,
};

inline constexpr std::array<const char*, 7> kReasonNames = {
    "ok",             "not_visible",    "too_far",        "receptacle_closed",
    "inventory_full", "inventory_empty", "invalid_target"};

struct InteractionFeedback {
    bool success = false;
    Reason reason = Reason::invalid_target;
};

inline InteractionFeedback feedback_ok() { return {true, Reason::ok}; }
inline InteractionFeedback feedback_fail(Reason r) { return {false, r}; }

// ---------------------------------------------------------------------------
// Scene
// ---------------------------------------------------------------------------

enum class Dir : int { N = 0, E = 1, S = 2, W = 3 };
enum class Pitch : int { Level = 0, Down = 1 };

inline int dx_of(Dir d) { return d == Dir::E ? 1 : d == Dir::W ? -1 : 0; }
inline int dy_of(Dir d) { return d == Dir::S ? 1 : d == Dir::N ? -1 : 0; }
inline Dir rotate_left(Dir d) { return Dir((int(d) + 3) % 4); }
inline Dir rotate_right(Dir d) { return Dir((int(d) + 1) % 4); }

struct AgentPose {
    int x = 0;
    int y = 0;
    Dir r = Dir::N;
    Pitch h = Pitch::Level;

    bool operator==(const AgentPose&) const = default;
};

struct Receptacle {
    int kind;
    int x, y;
    bool is_open = false;  // meaningful only when openable
    bool is_on = false;    // meaningful only when toggleable

    bool operator==(const Receptacle&) const = default;
};

// location: receptacle index, or -1 when held by the agent.
struct WorldObject {
    int kind;
    int location;
    bool picked = false;  // sticky: has been picked up at least once
    bool heated = false;
    bool cooled = false;
    bool cleaned = false;
    bool sliced = false;

    bool operator==(const WorldObject&) const = default;
};

struct Scene {
    int width = 9;
    int height = 9;
    std::vector<Receptacle> receptacles;
    std::vector<WorldObject> objects;
    AgentPose agent;
    std::uint64_t rng_seed = 0;
    int step_count = 0;

    bool operator==(const Scene&) const = default;

    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    // index of the receptacle occupying (x, y), or -1
    int receptacle_at(int x, int y) const {
        for (std::size_t i = 0; i < receptacles.size(); ++i)
            if (receptacles[i].x == x && receptacles[i].y == y) return int(i);
        return -1;
    }

    bool cell_free(int x, int y) const { return in_bounds(x, y) && receptacle_at(x, y) < 0; }

    int inventory_object() const {
        for (std::size_t i = 0; i < objects.size(); ++i)
            if (objects[i].location < 0) return int(i);
        return -1;
    }

    int find_receptacle(int kind) const {
        for (std::size_t i = 0; i < receptacles.size(); ++i)
            if (receptacles[i].kind == kind) return int(i);
        return -1;
    }

    std::vector<int> contents(int receptacle_index) const {
        std::vector<int> ids;
        for (std::size_t i = 0; i < objects.size(); ++i)
            if (objects[i].location == receptacle_index) ids.push_back(int(i));
        return ids;
    }
};

// ---------------------------------------------------------------------------
// Goal predicates and tasks
// ---------------------------------------------------------------------------

enum class StateFlag { heated, cooled, cleaned, sliced };

inline const char* state_flag_name(StateFlag f) {
    switch (f) {
        case StateFlag::heated: return "heated";
        case StateFlag::cooled: return "cooled";
        case StateFlag::cleaned: return "cleaned";
        case StateFlag::sliced: return "sliced";
    }
    return "?";
}

inline bool object_has_flag(const WorldObject& o, StateFlag f) {
    switch (f) {
        case StateFlag::heated: return o.heated;
        case StateFlag::cooled: return o.cooled;
        case StateFlag::cleaned: return o.cleaned;
        case StateFlag::sliced: return o.sliced;
    }
    return false;
}

// Picked:  some object of `kind` has been picked up.
// State:   some object of `kind` carries `flag`.
// Placed:  at least `min_count` objects of `kind` (carrying `flag` when
//          `flag_required`) sit in a receptacle of kind `rkind`.
struct Predicate {
    enum class Type { Picked, State, Placed };
    Type type;
    int kind = -1;
    StateFlag flag = StateFlag::heated;
    bool flag_required = false;
    int rkind = -1;
    int min_count = 1;
};

inline bool predicate_holds(const Scene& scene, const Predicate& p) {
    switch (p.type) {
        case Predicate::Type::Picked:
            for (const auto& o : scene.objects)
                if (o.kind == p.kind && o.picked) return true;
            return false;
        case Predicate::Type::State:
            for (const auto& o : scene.objects)
                if (o.kind == p.kind && object_has_flag(o, p.flag)) return true;
            return false;
        case Predicate::Type::Placed: {
            int count = 0;
            for (const auto& o : scene.objects) {
                if (o.kind != p.kind || o.location < 0) continue;
                if (p.flag_required && !object_has_flag(o, p.flag)) continue;
                if (scene.receptacles[std::size_t(o.location)].kind == p.rkind) ++count;
            }
            return count >= p.min_count;
        }
    }
    return false;
}

enum class TaskTemplate {
    pick_and_place,
    pick_two_and_place,
    heat_then_place,
    cool_then_place,
    clean_then_place,
    slice_and_place,
};
inline constexpr int kNumTaskTemplates = 6;

inline constexpr std::array<const char*, 6> kTemplateNames = {
    "pick_and_place", "pick_two_and_place", "heat_then_place",
    "cool_then_place", "clean_then_place",  "slice_and_place"};

struct Instruction {
    std::vector<std::string> goal_text;
    std::vector<std::vector<std::string>> step_texts;
    bool noise_applied = false;
};

struct Task {
    TaskTemplate tmpl;
    std::vector<Predicate> goal_conditions;
    Instruction instruction;
    int step_budget = 200;
    // Structured goal parameters, used by the oracle solver.
    int target_kind = -1;
    int dest_rkind = -1;
    bool combined_steps = false;  // "pick up the X from the R" style step texts
};

struct GoalCheck {
    bool success;
    int satisfied;
    int total;
    double fraction() const { return total == 0 ? 0.0 : double(satisfied) / double(total); }
};

inline GoalCheck check_goal(const Scene& scene, const Task& task) {
    int sat = 0;
    for (const auto& p : task.goal_conditions)
        if (predicate_holds(scene, p)) ++sat;
    int total = int(task.goal_conditions.size());
    return {sat == total && total > 0, sat, total};
}

// ---------------------------------------------------------------------------
// Visibility
// ---------------------------------------------------------------------------

inline constexpr int kConeDepth = 3;
inline constexpr int kConeHalfWidth = 1;

inline bool pitch_ok(const ReceptacleSpec& spec, Pitch h) {
    return spec.low ? h == Pitch::Down : h == Pitch::Level;
}

// Cells covered by the forward view cone, nearest first.
inline std::vector<std::pair<int, int>> cone_cells(const Scene& scene, const AgentPose& pose) {
    std::vector<std::pair<int, int>> cells;
    int fx = dx_of(pose.r), fy = dy_of(pose.r);
    int rx = -fy, ry = fx;  // right-hand lateral
    for (int d = 1; d <= kConeDepth; ++d) {
        for (int lat = -kConeHalfWidth; lat <= kConeHalfWidth; ++lat) {
            int x = pose.x + d * fx + lat * rx;
            int y = pose.y + d * fy + lat * ry;
            if (scene.in_bounds(x, y)) cells.emplace_back(x, y);
        }
    }
    return cells;
}

inline bool receptacle_visible(const Scene& scene, int rindex, const AgentPose& pose) {
    const auto& r = scene.receptacles[std::size_t(rindex)];
    if (!pitch_ok(receptacle_spec(r.kind), pose.h)) return false;
    for (auto [x, y] : cone_cells(scene, pose))
        if (x == r.x && y == r.y) return true;
    return false;
}

inline bool object_visible(const Scene& scene, int oindex, const AgentPose& pose) {
    const auto& o = scene.objects[std::size_t(oindex)];
    if (o.location < 0) return false;  // held items are not part of the view
    const auto& r = scene.receptacles[std::size_t(o.location)];
    if (receptacle_spec(r.kind).openable && !r.is_open) return false;
    return receptacle_visible(scene, o.location, pose);
}

// Sorted unique kind names with line-of-sight from the agent's pose.
inline std::vector<std::string> visible_objects(const Scene& scene) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < scene.receptacles.size(); ++i)
        if (receptacle_visible(scene, int(i), scene.agent))
            names.push_back(kind_name(scene.receptacles[i].kind));
    for (std::size_t i = 0; i < scene.objects.size(); ++i)
        if (object_visible(scene, int(i), scene.agent))
            names.push_back(kind_name(scene.objects[i].kind));
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

// Templated view description, one "a <obj> on <receptacle>" phrase per
// visible (object, receptacle) pair in sorted order.
inline std::vector<std::string> caption(const Scene& scene) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        if (!object_visible(scene, int(i), scene.agent)) continue;
        const auto& o = scene.objects[i];
        pairs.emplace_back(kind_name(o.kind),
                           kind_name(scene.receptacles[std::size_t(o.location)].kind));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    if (pairs.empty()) return {"nothing", "visible"};
    std::vector<std::string> tokens;
    for (const auto& [obj, rec] : pairs) {
        tokens.push_back("a");
        tokens.push_back(obj);
        tokens.push_back("on");
        tokens.push_back(rec);
    }
    return tokens;
}

// ---------------------------------------------------------------------------
// Transition function
// ---------------------------------------------------------------------------

namespace detail {

// Receptacle directly ahead with matching pitch, or -1.
inline int facing_receptacle(const Scene& scene, const AgentPose& pose) {
    int x = pose.x + dx_of(pose.r), y = pose.y + dy_of(pose.r);
    int ri = scene.receptacle_at(x, y);
    if (ri < 0) return -1;
    if (!pitch_ok(receptacle_spec(scene.receptacles[std::size_t(ri)].kind), pose.h)) return -1;
    return ri;
}

inline bool any_receptacle_of_kind_visible(const Scene& scene, int kind) {
    for (std::size_t i = 0; i < scene.receptacles.size(); ++i)
        if (scene.receptacles[i].kind == kind && receptacle_visible(scene, int(i), scene.agent))
            return true;
    return false;
}

inline bool any_object_of_kind_visible(const Scene& scene, int kind) {
    for (std::size_t i = 0; i < scene.objects.size(); ++i)
        if (scene.objects[i].kind == kind && object_visible(scene, int(i), scene.agent))
            return true;
    return false;
}

// Failure reason when the agent is not squarely in front of an instance of
// `kind`: too_far when one is visible somewhere in the cone, else not_visible.
inline InteractionFeedback miss_reason_receptacle(const Scene& scene, int kind) {
    return feedback_fail(any_receptacle_of_kind_visible(scene, kind) ? Reason::too_far
                                                                     : Reason::not_visible);
}

inline InteractionFeedback miss_reason_object(const Scene& scene, int kind) {
    return feedback_fail(any_object_of_kind_visible(scene, kind) ? Reason::too_far
                                                                 : Reason::not_visible);
}

inline InteractionFeedback do_pickup(Scene& scene, int kind) {
    if (!is_object_kind(kind)) return feedback_fail(Reason::invalid_target);
    if (scene.inventory_object() >= 0) return feedback_fail(Reason::inventory_full);
    int ri = facing_receptacle(scene, scene.agent);
    if (ri >= 0) {
        const auto& r = scene.receptacles[std::size_t(ri)];
        bool has_kind = false;
        for (const auto& o : scene.objects)
            if (o.location == ri && o.kind == kind) has_kind = true;
        if (has_kind) {
            if (receptacle_spec(r.kind).openable && !r.is_open)
                return feedback_fail(Reason::receptacle_closed);
            for (auto& o : scene.objects) {
                if (o.location == ri && o.kind == kind) {
                    o.location = -1;
                    o.picked = true;
                    return feedback_ok();
                }
            }
        }
    }
    return miss_reason_object(scene, kind);
}

inline InteractionFeedback do_put(Scene& scene, int kind) {
    if (!is_receptacle_kind(kind)) return feedback_fail(Reason::invalid_target);
    int held = scene.inventory_object();
    if (held < 0) return feedback_fail(Reason::inventory_empty);
    int ri = facing_receptacle(scene, scene.agent);
    if (ri >= 0 && scene.receptacles[std::size_t(ri)].kind == kind) {
        auto& r = scene.receptacles[std::size_t(ri)];
        if (receptacle_spec(r.kind).openable && !r.is_open)
            return feedback_fail(Reason::receptacle_closed);
        auto& obj = scene.objects[std::size_t(held)];
        obj.location = ri;
        if (kind_name(r.kind) == "fridge") {
            obj.cooled = true;
            obj.heated = false;
        }
        return feedback_ok();
    }
    return miss_reason_receptacle(scene, kind);
}

inline InteractionFeedback do_open_close(Scene& scene, int kind, bool open) {
    if (!is_receptacle_kind(kind) || !receptacle_spec(kind).openable)
        return feedback_fail(Reason::invalid_target);
    int ri = facing_receptacle(scene, scene.agent);
    if (ri >= 0 && scene.receptacles[std::size_t(ri)].kind == kind) {
        auto& r = scene.receptacles[std::size_t(ri)];
        if (r.is_open == open) return feedback_fail(Reason::invalid_target);
        r.is_open = open;
        return feedback_ok();
    }
    return miss_reason_receptacle(scene, kind);
}

inline InteractionFeedback do_toggle(Scene& scene, int kind, bool on) {
    if (!is_receptacle_kind(kind) || !receptacle_spec(kind).toggleable)
        return feedback_fail(Reason::invalid_target);
    int ri = facing_receptacle(scene, scene.agent);
    if (ri >= 0 && scene.receptacles[std::size_t(ri)].kind == kind) {
        auto& r = scene.receptacles[std::size_t(ri)];
        if (r.is_on == on) return feedback_fail(Reason::invalid_target);
        r.is_on = on;
        if (on) {
            bool microwave = kind_name(kind) == "microwave";
            for (auto& o : scene.objects) {
                if (o.location != ri) continue;
                if (microwave) {
                    o.heated = true;
                    o.cooled = false;
                } else {  // sink
                    o.cleaned = true;
                }
            }
        }
        return feedback_ok();
    }
    return miss_reason_receptacle(scene, kind);
}

inline InteractionFeedback do_slice(Scene& scene, int kind) {
    if (!is_object_kind(kind) || !is_sliceable(kind)) return feedback_fail(Reason::invalid_target);
    int ri = facing_receptacle(scene, scene.agent);
    if (ri >= 0) {
        const auto& r = scene.receptacles[std::size_t(ri)];
        bool has_kind = false;
        for (const auto& o : scene.objects)
            if (o.location == ri && o.kind == kind) has_kind = true;
        if (has_kind) {
            if (receptacle_spec(r.kind).openable && !r.is_open)
                return feedback_fail(Reason::receptacle_closed);
            int target = -1;
            for (std::size_t i = 0; i < scene.objects.size(); ++i) {
                const auto& o = scene.objects[i];
                if (o.location == ri && o.kind == kind && !o.sliced) {
                    target = int(i);
                    break;
                }
            }
            if (target < 0) return feedback_fail(Reason::invalid_target);  // already sliced
            WorldObject piece = scene.objects[std::size_t(target)];
            piece.sliced = true;
            piece.picked = false;
            scene.objects.erase(scene.objects.begin() + target);
            for (int p = 0; p < kSlicePieces; ++p) scene.objects.push_back(piece);
            return feedback_ok();
        }
    }
    return miss_reason_object(scene, kind);
}

}  // namespace detail

// Applies one low-level action. All failures surface in the returned
// feedback; step_count always increments exactly once.
inline InteractionFeedback step(Scene& scene, const LowLevelAction& action) {
    scene.step_count += 1;
    switch (action.type) {
        case ActionType::MoveAhead: {
            int x = scene.agent.x + dx_of(scene.agent.r);
            int y = scene.agent.y + dy_of(scene.agent.r);
            if (!scene.cell_free(x, y)) return feedback_fail(Reason::invalid_target);
            scene.agent.x = x;
            scene.agent.y = y;
            return feedback_ok();
        }
        case ActionType::RotateLeft:
            scene.agent.r = rotate_left(scene.agent.r);
            return feedback_ok();
        case ActionType::RotateRight:
            scene.agent.r = rotate_right(scene.agent.r);
            return feedback_ok();
        case ActionType::LookUp:
            if (scene.agent.h != Pitch::Down) return feedback_fail(Reason::invalid_target);
            scene.agent.h = Pitch::Level;
            return feedback_ok();
        case ActionType::LookDown:
            if (scene.agent.h != Pitch::Level) return feedback_fail(Reason::invalid_target);
            scene.agent.h = Pitch::Down;
            return feedback_ok();
        case ActionType::Pickup:
            return detail::do_pickup(scene, action.target);
        case ActionType::Put:
            return detail::do_put(scene, action.target);
        case ActionType::Open:
            return detail::do_open_close(scene, action.target, true);
        case ActionType::Close:
            return detail::do_open_close(scene, action.target, false);
        case ActionType::ToggleOn:
            return detail::do_toggle(scene, action.target, true);
        case ActionType::ToggleOff:
            return detail::do_toggle(scene, action.target, false);
        case ActionType::Slice:
            return detail::do_slice(scene, action.target);
    }
    return feedback_fail(Reason::invalid_target);
}

// Structural invariants; used by fuzz tests and debug assertions.
inline void check_invariants(const Scene& scene) {
    int held = 0;
    for (const auto& o : scene.objects) {
        if (o.location < 0) {
            ++held;
        } else if (o.location >= int(scene.receptacles.size())) {
            throw Error("object location out of range");
        }
    }
    if (held > 1) throw Error("inventory holds more than one object");
    if (!scene.cell_free(scene.agent.x, scene.agent.y))
        throw Error("agent pose occupies a non-free cell");
    for (std::size_t i = 0; i < scene.receptacles.size(); ++i) {
        const auto& r = scene.receptacles[i];
        if (!scene.in_bounds(r.x, r.y)) throw Error("receptacle out of bounds");
        for (std::size_t j = i + 1; j < scene.receptacles.size(); ++j)
            if (scene.receptacles[j].x == r.x && scene.receptacles[j].y == r.y)
                throw Error("receptacles overlap");
    }
    if (scene.step_count < 0) throw Error("negative step count");
}

}  // namespace epo::gridhouse
