#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "epo/gridhouse.hpp"

namespace epo::lexicon {

using gridhouse::ActionType;
using gridhouse::InteractionFeedback;
using gridhouse::LowLevelAction;
using gridhouse::Subgoal;
using gridhouse::SubgoalType;

inline constexpr int kContextCap = 128;

// ---------------------------------------------------------------------------
// Closed vocabulary
// ---------------------------------------------------------------------------

class Vocab {
  public:
    Vocab() = default;

    explicit Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            auto [it, inserted] = index_.emplace(tokens_[i], int(i));
            if (!inserted) throw VocabError("duplicate token: " + tokens_[i]);
        }
        bos_ = id("BOS");
        eos_ = id("EOS");
        sep_ = id("SEP");
        stop_ = id("STOP");
        none_ = id("None");
    }

    int size() const { return int(tokens_.size()); }

    bool has(const std::string& token) const { return index_.count(token) > 0; }

    int id(const std::string& token) const {
        auto it = index_.find(token);
        if (it == index_.end()) throw VocabError("token not in vocabulary: " + token);
        return it->second;
    }

    const std::string& token(int id) const {
        if (id < 0 || id >= size()) throw VocabError("token id out of range");
        return tokens_[std::size_t(id)];
    }

    const std::vector<std::string>& tokens() const { return tokens_; }

    std::vector<int> ids(const std::vector<std::string>& words) const {
        std::vector<int> out;
        out.reserve(words.size());
        for (const auto& w : words) out.push_back(id(w));
        return out;
    }

    std::vector<std::string> words(std::span<const int> ids) const {
        std::vector<std::string> out;
        out.reserve(ids.size());
        for (int i : ids) out.push_back(token(i));
        return out;
    }

    std::string text(std::span<const int> ids) const { return join(words(ids), " "); }

    std::uint64_t hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& t : tokens_) {
            h = fnv1a64(t, h);
            h = fnv1a64("\n", h);
        }
        return h;
    }

    int bos() const { return bos_; }
    int eos() const { return eos_; }
    int sep() const { return sep_; }
    int stop() const { return stop_; }
    int none() const { return none_; }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
    int bos_ = -1, eos_ = -1, sep_ = -1, stop_ = -1, none_ = -1;
};

// Every template the renderers can emit draws from this fixed word list.
inline Vocab build_vocab() {
    std::vector<std::string> tokens = {"BOS", "EOS", "SEP", "STOP", "None"};
    for (const char* n : gridhouse::kActionNames) tokens.push_back(n);
    for (const char* n : {"Moveto", "Heat", "Cool", "Clean"}) tokens.push_back(n);
    for (int k = 0; k < gridhouse::kNumKinds; ++k) tokens.push_back(gridhouse::kind_name(k));
    for (const auto& g : gridhouse::kAliasGroups) tokens.push_back(g.alias);
    for (const char* w : {"go", "to", "the", "pick", "up", "from", "put", "on", "in", "two",
                          "and", "it", "heat", "chill", "wash", "slice", "do", "a"})
        tokens.push_back(w);
    for (const char* w : {"visible:", "interactable:", "action", "successful", "failed:",
                          "nothing", "visible"})
        tokens.push_back(w);
    for (const char* r : gridhouse::kReasonNames) tokens.push_back(r);
    return Vocab(std::move(tokens));
}

inline void save_vocab(const Vocab& vocab, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["tokens"] = vocab.tokens();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write vocab: " + path);
    f << j.dump(2) << "\n";
}

inline Vocab load_vocab(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read vocab: " + path);
    nlohmann::json j;
    f >> j;
    if (!j.contains("tokens")) throw IoError("vocab file missing tokens: " + path);
    return Vocab(j["tokens"].get<std::vector<std::string>>());
}

// ---------------------------------------------------------------------------
// Feedback rendering
// ---------------------------------------------------------------------------

enum class FeedbackMode { none, interaction, visual, both };

inline constexpr std::array<const char*, 4> kFeedbackModeNames = {"none", "interaction",
                                                                  "visual", "both"};

inline FeedbackMode feedback_mode_from_name(const std::string& name) {
    for (int i = 0; i < 4; ++i)
        if (name == kFeedbackModeNames[std::size_t(i)]) return FeedbackMode(i);
    throw ConfigError("unknown feedback mode: " + name);
}

// Raw material for one bundle. The interaction part is either the result of
// the last attempted action or the exploration-verified kind list (used for
// high-level contexts, where no single action result applies).
struct FeedbackParts {
    std::optional<std::vector<std::string>> visible;       // kind names, sorted
    std::optional<InteractionFeedback> result;
    std::optional<std::vector<std::string>> interactable;  // kind names, sorted
};

struct FeedbackBundle {
    std::vector<int> visual_tokens;
    std::vector<int> interaction_tokens;

    std::vector<int> tokens(const Vocab& vocab) const {
        std::vector<int> out = visual_tokens;
        if (!visual_tokens.empty() && !interaction_tokens.empty()) out.push_back(vocab.sep());
        out.insert(out.end(), interaction_tokens.begin(), interaction_tokens.end());
        return out;
    }

    bool empty() const { return visual_tokens.empty() && interaction_tokens.empty(); }
};

inline FeedbackBundle render_feedback(const Vocab& vocab, const FeedbackParts& parts,
                                      FeedbackMode mode) {
    FeedbackBundle bundle;
    bool want_visual = mode == FeedbackMode::visual || mode == FeedbackMode::both;
    bool want_interaction = mode == FeedbackMode::interaction || mode == FeedbackMode::both;

    if (want_visual && parts.visible.has_value()) {
        bundle.visual_tokens.push_back(vocab.id("visible:"));
        if (parts.visible->empty()) {
            bundle.visual_tokens.push_back(vocab.id("nothing"));
        } else {
            for (const auto& k : *parts.visible) bundle.visual_tokens.push_back(vocab.id(k));
        }
    }
    if (want_interaction) {
        if (parts.result.has_value()) {
            bundle.interaction_tokens.push_back(vocab.id("action"));
            if (parts.result->success) {
                bundle.interaction_tokens.push_back(vocab.id("successful"));
            } else {
                bundle.interaction_tokens.push_back(vocab.id("failed:"));
                bundle.interaction_tokens.push_back(
                    vocab.id(gridhouse::kReasonNames[int(parts.result->reason)]));
            }
        } else if (parts.interactable.has_value()) {
            bundle.interaction_tokens.push_back(vocab.id("interactable:"));
            if (parts.interactable->empty()) {
                bundle.interaction_tokens.push_back(vocab.id("nothing"));
            } else {
                for (const auto& k : *parts.interactable)
                    bundle.interaction_tokens.push_back(vocab.id(k));
            }
        }
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Structured output rendering and parsing
// ---------------------------------------------------------------------------

enum class OutputKind { subgoal, action };

struct Stop {
    bool operator==(const Stop&) const = default;
};

using ParsedOutput = std::variant<Subgoal, LowLevelAction, Stop>;

inline std::vector<int> render_subgoal(const Vocab& vocab, const Subgoal& sg) {
    return {vocab.id(gridhouse::kSubgoalNames[int(sg.type)]),
            vocab.id(gridhouse::kind_name(sg.target))};
}

inline std::vector<int> render_action(const Vocab& vocab, const LowLevelAction& a) {
    return {vocab.id(gridhouse::kActionNames[int(a.type)]),
            a.target >= 0 ? vocab.id(gridhouse::kind_name(a.target)) : vocab.none()};
}

namespace detail {

inline int subgoal_type_from_token(const Vocab& vocab, int tok) {
    const std::string& w = vocab.token(tok);
    for (int i = 0; i < gridhouse::kNumSubgoalTypes; ++i)
        if (w == gridhouse::kSubgoalNames[std::size_t(i)]) return i;
    return -1;
}

inline int action_type_from_token(const Vocab& vocab, int tok) {
    const std::string& w = vocab.token(tok);
    for (int i = 0; i < gridhouse::kNumActionTypes; ++i)
        if (w == gridhouse::kActionNames[std::size_t(i)]) return i;
    return -1;
}

}  // namespace detail

// Inverse of the renderers: "<type> <target|None>" or the single STOP token.
// Positions in errors are 1-based.
inline ParsedOutput parse_output(const Vocab& vocab, std::span<const int> tokens,
                                 OutputKind kind) {
    if (tokens.empty()) throw ParseError(1, "empty output");
    if (tokens[0] == vocab.stop()) {
        if (kind != OutputKind::action) throw ParseError(1, "STOP is not a subgoal");
        if (tokens.size() > 1) throw ParseError(2, "tokens after STOP");
        return Stop{};
    }
    if (kind == OutputKind::subgoal) {
        int type = detail::subgoal_type_from_token(vocab, tokens[0]);
        if (type < 0) throw ParseError(1, "not a subgoal type: " + vocab.token(tokens[0]));
        if (tokens.size() < 2) throw ParseError(2, "missing subgoal target");
        if (tokens.size() > 2) throw ParseError(3, "trailing tokens after subgoal");
        int target = gridhouse::kind_from_name(vocab.token(tokens[1]));
        if (target < 0) throw ParseError(2, "not a kind: " + vocab.token(tokens[1]));
        return Subgoal{SubgoalType(type), target};
    }
    int type = detail::action_type_from_token(vocab, tokens[0]);
    if (type < 0) throw ParseError(1, "not an action type: " + vocab.token(tokens[0]));
    bool takes_target = gridhouse::action_takes_target(ActionType(type));
    if (tokens.size() < 2)
        throw ParseError(2, takes_target ? "missing action target" : "missing None");
    if (tokens.size() > 2) throw ParseError(3, "trailing tokens after action");
    if (tokens[1] == vocab.none()) {
        if (takes_target) throw ParseError(2, "interaction action requires a target");
        return LowLevelAction{ActionType(type), -1};
    }
    int target = gridhouse::kind_from_name(vocab.token(tokens[1]));
    if (target < 0) throw ParseError(2, "not a kind: " + vocab.token(tokens[1]));
    if (!takes_target) throw ParseError(2, "navigation action must carry None");
    return LowLevelAction{ActionType(type), target};
}

// ---------------------------------------------------------------------------
// Proposed outputs and enumeration
// ---------------------------------------------------------------------------

inline constexpr std::int64_t kStopRankKey = 1'000'000;

inline std::int64_t rank_key_of(OutputKind kind, const ParsedOutput& parsed) {
    if (std::holds_alternative<Stop>(parsed)) return kStopRankKey;
    if (kind == OutputKind::subgoal) {
        const auto& sg = std::get<Subgoal>(parsed);
        return std::int64_t(sg.type) * gridhouse::kNumKinds + sg.target;
    }
    const auto& a = std::get<LowLevelAction>(parsed);
    int t = int(a.type);
    if (!gridhouse::action_takes_target(a.type)) return t;
    return gridhouse::kNumUntargetedActions +
           std::int64_t(t - gridhouse::kNumUntargetedActions) * gridhouse::kNumKinds + a.target;
}

struct ProposedOutput {
    OutputKind kind;
    std::vector<int> tokens;
    ParsedOutput parsed;
    std::int64_t rank_key;

    bool operator==(const ProposedOutput& o) const {
        return kind == o.kind && tokens == o.tokens;
    }
};

inline ProposedOutput make_proposal(const Vocab& vocab, OutputKind kind,
                                    const ParsedOutput& parsed) {
    ProposedOutput p;
    p.kind = kind;
    p.parsed = parsed;
    p.rank_key = rank_key_of(kind, parsed);
    if (std::holds_alternative<Stop>(parsed)) {
        p.tokens = {vocab.stop()};
    } else if (kind == OutputKind::subgoal) {
        p.tokens = render_subgoal(vocab, std::get<Subgoal>(parsed));
    } else {
        p.tokens = render_action(vocab, std::get<LowLevelAction>(parsed));
    }
    return p;
}

inline ProposedOutput parse_proposal(const Vocab& vocab, std::span<const int> tokens,
                                     OutputKind kind) {
    return make_proposal(vocab, kind, parse_output(vocab, tokens, kind));
}

// Exhaustive candidate space over the given target kinds, in a stable
// canonical order: untargeted action types, then targeted types crossed with
// targets, then STOP (actions only).
inline std::vector<ProposedOutput> enumerate_outputs(const Vocab& vocab, OutputKind kind,
                                                     std::vector<int> target_kinds) {
    std::sort(target_kinds.begin(), target_kinds.end());
    target_kinds.erase(std::unique(target_kinds.begin(), target_kinds.end()),
                       target_kinds.end());
    std::vector<ProposedOutput> out;
    if (kind == OutputKind::subgoal) {
        for (int t = 0; t < gridhouse::kNumSubgoalTypes; ++t)
            for (int k : target_kinds)
                out.push_back(make_proposal(vocab, kind, Subgoal{SubgoalType(t), k}));
        return out;
    }
    for (int t = 0; t < gridhouse::kNumUntargetedActions; ++t)
        out.push_back(make_proposal(vocab, kind, LowLevelAction{ActionType(t), -1}));
    for (int t = gridhouse::kNumUntargetedActions; t < gridhouse::kNumActionTypes; ++t)
        for (int k : target_kinds)
            out.push_back(make_proposal(vocab, kind, LowLevelAction{ActionType(t), k}));
    out.push_back(make_proposal(vocab, kind, Stop{}));
    return out;
}

// ---------------------------------------------------------------------------
// Task contexts
// ---------------------------------------------------------------------------

enum class Role { highlevel, lowlevel };

struct TaskContext {
    Role role;
    std::vector<int> tokens;
};

inline TaskContext build_high_task(const Vocab& vocab, const std::vector<std::string>& goal_text,
                                   const std::vector<std::string>& step_text) {
    TaskContext ctx{Role::highlevel, {}};
    for (const auto& w : goal_text) ctx.tokens.push_back(vocab.id(w));
    ctx.tokens.push_back(vocab.sep());
    for (const auto& w : step_text) ctx.tokens.push_back(vocab.id(w));
    return ctx;
}

// Low-level task context: h k_h SEP a_past. The action history is truncated
// from the left (oldest first) to honor the context cap.
inline TaskContext build_low_task(const Vocab& vocab, const Subgoal& subgoal,
                                  const std::vector<LowLevelAction>& a_past,
                                  int cap = kContextCap) {
    TaskContext ctx{Role::lowlevel, render_subgoal(vocab, subgoal)};
    ctx.tokens.push_back(vocab.sep());
    std::size_t budget = cap > 3 ? std::size_t(cap - 3) : 0;  // room kept for BOS + F later
    std::size_t max_pairs = budget / 2;
    std::size_t start = a_past.size() > max_pairs ? a_past.size() - max_pairs : 0;
    for (std::size_t i = start; i < a_past.size(); ++i) {
        auto toks = render_action(vocab, a_past[i]);
        ctx.tokens.insert(ctx.tokens.end(), toks.begin(), toks.end());
    }
    return ctx;
}

// Policy / loss context: BOS F SEP T, left-truncated to the cap.
inline std::vector<int> build_policy_context(const Vocab& vocab, const FeedbackBundle& feedback,
                                             const TaskContext& task, int cap = kContextCap) {
    std::vector<int> tail = feedback.tokens(vocab);
    if (!tail.empty()) tail.push_back(vocab.sep());
    tail.insert(tail.end(), task.tokens.begin(), task.tokens.end());
    std::size_t budget = std::size_t(cap - 1);
    if (tail.size() > budget) tail.erase(tail.begin(), tail.begin() + long(tail.size() - budget));
    std::vector<int> ctx{vocab.bos()};
    ctx.insert(ctx.end(), tail.begin(), tail.end());
    return ctx;
}

// Reward-model input: BOS F SEP T SEP P.
inline std::vector<int> build_reward_input(const Vocab& vocab, const FeedbackBundle& feedback,
                                           const TaskContext& task,
                                           const std::vector<int>& proposal_tokens,
                                           int cap = kContextCap) {
    std::vector<int> tail = feedback.tokens(vocab);
    if (!tail.empty()) tail.push_back(vocab.sep());
    tail.insert(tail.end(), task.tokens.begin(), task.tokens.end());
    tail.push_back(vocab.sep());
    tail.insert(tail.end(), proposal_tokens.begin(), proposal_tokens.end());
    std::size_t budget = std::size_t(cap - 1);
    if (tail.size() > budget) tail.erase(tail.begin(), tail.begin() + long(tail.size() - budget));
    std::vector<int> ctx{vocab.bos()};
    ctx.insert(ctx.end(), tail.begin(), tail.end());
    return ctx;
}

}  // namespace epo::lexicon
