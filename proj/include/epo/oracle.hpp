#pragma once

#include <vector>

#include "epo/explore.hpp"
#include "epo/gridhouse.hpp"

namespace epo::gridhouse {

struct ExpertSubgoal {
    Subgoal subgoal;
    std::vector<LowLevelAction> actions;
};

// One entry per instruction step text.
struct ExpertStep {
    std::vector<ExpertSubgoal> subgoals;
};

struct ExpertTrajectory {
    std::vector<ExpertStep> steps;

    int length() const {
        int n = 0;
        for (const auto& s : steps)
            for (const auto& sg : s.subgoals) n += int(sg.actions.size());
        return n;
    }

    std::vector<LowLevelAction> flat_actions() const {
        std::vector<LowLevelAction> out;
        for (const auto& s : steps)
            for (const auto& sg : s.subgoals)
                out.insert(out.end(), sg.actions.begin(), sg.actions.end());
        return out;
    }
};

namespace detail {

// Receptacle currently holding the lowest-id object of `kind`.
inline int receptacle_of_kind_instance(const Scene& scene, int kind, int instance) {
    int seen = 0;
    for (const auto& o : scene.objects) {
        if (o.kind != kind) continue;
        if (seen == instance) return o.location;
        ++seen;
    }
    return -1;
}

}  // namespace detail

// The per-step subgoal skeleton for a task, derived from the initial scene.
// Instruction step texts are generated from the same grouping, so this is the
// ground-truth decomposition an ideal high-level policy should reproduce.
inline std::vector<std::vector<Subgoal>> subgoal_skeleton(const Scene& scene, const Task& task) {
    const int X = task.target_kind;
    const int R = task.dest_rkind;
    auto rkind_of = [&](int instance) {
        int ri = detail::receptacle_of_kind_instance(scene, X, instance);
        return ri < 0 ? -1 : scene.receptacles[std::size_t(ri)].kind;
    };
    const int kMicrowave = kind_from_name("microwave");
    const int kFridge = kind_from_name("fridge");
    const int kSink = kind_from_name("sink");

    std::vector<std::vector<Subgoal>> steps;
    auto fetch = [&](int src_rkind) {
        if (task.combined_steps) {
            steps.push_back({{SubgoalType::Moveto, src_rkind}, {SubgoalType::Pickup, X}});
        } else {
            steps.push_back({{SubgoalType::Moveto, src_rkind}});
            steps.push_back({{SubgoalType::Pickup, X}});
        }
    };
    auto deliver = [&] {
        steps.push_back({{SubgoalType::Moveto, R}});
        steps.push_back({{SubgoalType::Put, R}});
    };

    switch (task.tmpl) {
        case TaskTemplate::pick_and_place:
            fetch(rkind_of(0));
            deliver();
            break;
        case TaskTemplate::pick_two_and_place:
            fetch(rkind_of(0));
            deliver();
            fetch(rkind_of(1));
            deliver();
            break;
        case TaskTemplate::heat_then_place:
            fetch(rkind_of(0));
            steps.push_back({{SubgoalType::Moveto, kMicrowave}});
            steps.push_back({{SubgoalType::Heat, X}});
            deliver();
            break;
        case TaskTemplate::cool_then_place:
            fetch(rkind_of(0));
            steps.push_back({{SubgoalType::Moveto, kFridge}});
            steps.push_back({{SubgoalType::Cool, X}});
            deliver();
            break;
        case TaskTemplate::clean_then_place:
            fetch(rkind_of(0));
            steps.push_back({{SubgoalType::Moveto, kSink}});
            steps.push_back({{SubgoalType::Clean, X}});
            deliver();
            break;
        case TaskTemplate::slice_and_place:
            steps.push_back({{SubgoalType::Moveto, rkind_of(0)}});
            steps.push_back({{SubgoalType::Slice, X}});
            steps.push_back({{SubgoalType::Pickup, X}});
            deliver();
            break;
    }
    return steps;
}

namespace detail {

// Expands one interaction subgoal into primitive actions against the live
// scene, opening closed receptacles as needed. The agent is assumed to stand
// at a viewpoint for the subgoal's receptacle already.
inline std::vector<LowLevelAction> expand_interaction(Scene& scene, const Subgoal& sg) {
    std::vector<LowLevelAction> actions;
    auto run = [&](LowLevelAction a) {
        InteractionFeedback fb = step(scene, a);
        actions.push_back(a);
        if (!fb.success)
            throw SolverError("oracle action failed: " + std::string(kActionNames[int(a.type)]) +
                              " " + (a.target >= 0 ? kind_name(a.target) : "None") + " (" +
                              kReasonNames[int(fb.reason)] + ")");
    };
    auto open_if_closed = [&](int rkind) {
        int ri = scene.find_receptacle(rkind);
        if (ri < 0) return;
        const auto& r = scene.receptacles[std::size_t(ri)];
        if (receptacle_spec(r.kind).openable && !r.is_open) run({ActionType::Open, rkind});
    };
    // The agent stands at a viewpoint for the subgoal's receptacle, so the
    // one to open for Pickup/Slice is whatever it is facing.
    auto open_faced_if_closed = [&] {
        int ri = facing_receptacle(scene, scene.agent);
        if (ri < 0) return;
        const auto& r = scene.receptacles[std::size_t(ri)];
        if (receptacle_spec(r.kind).openable && !r.is_open) run({ActionType::Open, r.kind});
    };
    const int kMicrowave = kind_from_name("microwave");
    const int kFridge = kind_from_name("fridge");
    const int kSink = kind_from_name("sink");

    switch (sg.type) {
        case SubgoalType::Moveto:
            throw SolverError("Moveto must be routed through navigate");
        case SubgoalType::Pickup:
            open_faced_if_closed();
            run({ActionType::Pickup, sg.target});
            break;
        case SubgoalType::Put:
            open_if_closed(sg.target);
            run({ActionType::Put, sg.target});
            break;
        case SubgoalType::Open:
            run({ActionType::Open, sg.target});
            break;
        case SubgoalType::Close:
            run({ActionType::Close, sg.target});
            break;
        case SubgoalType::ToggleOn:
            run({ActionType::ToggleOn, sg.target});
            break;
        case SubgoalType::Heat:
            open_if_closed(kMicrowave);
            run({ActionType::Put, kMicrowave});
            run({ActionType::ToggleOn, kMicrowave});
            run({ActionType::ToggleOff, kMicrowave});
            run({ActionType::Pickup, sg.target});
            break;
        case SubgoalType::Cool:
            open_if_closed(kFridge);
            run({ActionType::Put, kFridge});
            run({ActionType::Pickup, sg.target});
            break;
        case SubgoalType::Clean:
            run({ActionType::Put, kSink});
            run({ActionType::ToggleOn, kSink});
            run({ActionType::ToggleOff, kSink});
            run({ActionType::Pickup, sg.target});
            break;
        case SubgoalType::Slice:
            open_faced_if_closed();
            run({ActionType::Slice, sg.target});
            break;
    }
    return actions;
}

}  // namespace detail

// Solves the task with full scene knowledge, producing the annotated expert
// trajectory. Throws SolverError when the step budget is exceeded or an
// expansion fails (must not happen for generated tasks).
inline ExpertTrajectory oracle_solve(const Scene& scene, const Task& task) {
    Scene sim = scene;
    sim.step_count = 0;
    ViewpointMap vmap = explore(sim);
    auto skeleton = subgoal_skeleton(sim, task);

    ExpertTrajectory traj;
    for (const auto& group : skeleton) {
        ExpertStep estep;
        for (const auto& sg : group) {
            ExpertSubgoal esg{sg, {}};
            if (sg.type == SubgoalType::Moveto) {
                esg.actions = navigate(sim, sg.target, vmap);
                for (const auto& a : esg.actions) {
                    InteractionFeedback fb = step(sim, a);
                    if (!fb.success) throw SolverError("oracle navigation step failed");
                }
            } else {
                esg.actions = detail::expand_interaction(sim, sg);
            }
            if (sim.step_count > task.step_budget) throw SolverError("oracle exceeded step budget");
            estep.subgoals.push_back(std::move(esg));
        }
        traj.steps.push_back(std::move(estep));
    }

    GoalCheck check = check_goal(sim, task);
    if (!check.success) throw SolverError("oracle trajectory does not satisfy the goal");
    return traj;
}

}  // namespace epo::gridhouse
