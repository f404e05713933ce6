#include <gtest/gtest.h>

#include <cstdio>
#include <set>

#include "epo/lexicon.hpp"
#include "epo/scenegen.hpp"

using namespace epo;
using namespace epo::lexicon;
namespace gh = epo::gridhouse;

namespace {

const Vocab& vocab() {
    static Vocab v = build_vocab();
    return v;
}

std::vector<int> ids_of(std::initializer_list<const char*> words) {
    std::vector<int> out;
    for (const char* w : words) out.push_back(vocab().id(w));
    return out;
}

}  // namespace

TEST(Vocab, SpecialsPresentAndBijective) {
    const Vocab& v = vocab();
    EXPECT_GE(v.size(), 80);
    std::set<std::string> seen;
    for (int i = 0; i < v.size(); ++i) {
        EXPECT_EQ(v.id(v.token(i)), i);
        seen.insert(v.token(i));
    }
    EXPECT_EQ(int(seen.size()), v.size());
    EXPECT_THROW(v.id("definitely-not-a-token"), VocabError);
}

TEST(Vocab, JsonRoundTrip) {
    std::string path = testing::TempDir() + "vocab_roundtrip.json";
    save_vocab(vocab(), path);
    Vocab loaded = load_vocab(path);
    EXPECT_EQ(loaded.tokens(), vocab().tokens());
    EXPECT_EQ(loaded.hash(), vocab().hash());
    std::remove(path.c_str());
}

TEST(RenderFeedback, ActionSuccessful) {
    FeedbackParts parts;
    parts.result = gh::feedback_ok();
    auto b = render_feedback(vocab(), parts, FeedbackMode::interaction);
    EXPECT_EQ(b.interaction_tokens, ids_of({"action", "successful"}));
    EXPECT_TRUE(b.visual_tokens.empty());
}

TEST(RenderFeedback, ActionFailedWithReason) {
    FeedbackParts parts;
    parts.result = gh::feedback_fail(gh::Reason::receptacle_closed);
    auto b = render_feedback(vocab(), parts, FeedbackMode::interaction);
    EXPECT_EQ(b.interaction_tokens, ids_of({"action", "failed:", "receptacle_closed"}));
}

TEST(RenderFeedback, VisibleList) {
    FeedbackParts parts;
    parts.visible = std::vector<std::string>{"apple", "counter"};
    auto b = render_feedback(vocab(), parts, FeedbackMode::visual);
    EXPECT_EQ(b.visual_tokens, ids_of({"visible:", "apple", "counter"}));
}

TEST(RenderFeedback, NoneModeIsEmpty) {
    FeedbackParts parts;
    parts.visible = std::vector<std::string>{"apple"};
    parts.result = gh::feedback_ok();
    auto b = render_feedback(vocab(), parts, FeedbackMode::none);
    EXPECT_TRUE(b.empty());
    EXPECT_TRUE(b.tokens(vocab()).empty());
}

TEST(RenderFeedback, BothJoinsWithSep) {
    FeedbackParts parts;
    parts.visible = std::vector<std::string>{"mug"};
    parts.result = gh::feedback_ok();
    auto b = render_feedback(vocab(), parts, FeedbackMode::both);
    auto toks = b.tokens(vocab());
    std::vector<int> expected = ids_of({"visible:", "mug"});
    expected.push_back(vocab().sep());
    auto tail = ids_of({"action", "successful"});
    expected.insert(expected.end(), tail.begin(), tail.end());
    EXPECT_EQ(toks, expected);
}

TEST(RenderFeedback, InteractableListVariant) {
    FeedbackParts parts;
    parts.interactable = std::vector<std::string>{"apple", "fridge"};
    auto b = render_feedback(vocab(), parts, FeedbackMode::interaction);
    EXPECT_EQ(b.interaction_tokens, ids_of({"interactable:", "apple", "fridge"}));
}

TEST(RenderFeedback, InjectiveOverReasons) {
    std::set<std::vector<int>> rendered;
    for (int r = 0; r < 7; ++r) {
        FeedbackParts parts;
        parts.result = gh::InteractionFeedback{r == 0, gh::Reason(r)};
        rendered.insert(
            render_feedback(vocab(), parts, FeedbackMode::interaction).interaction_tokens);
    }
    EXPECT_EQ(rendered.size(), 7u);
}

TEST(ParseOutput, GrammarExamples) {
    auto a = parse_output(vocab(), ids_of({"Pickup", "apple"}), OutputKind::action);
    EXPECT_EQ(std::get<gh::LowLevelAction>(a),
              (gh::LowLevelAction{gh::ActionType::Pickup, gh::kind_from_name("apple")}));

    auto s = parse_output(vocab(), std::vector<int>{vocab().stop()}, OutputKind::action);
    EXPECT_TRUE(std::holds_alternative<Stop>(s));

    try {
        parse_output(vocab(), ids_of({"Pickup"}), OutputKind::action);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position, 2u);
    }
}

TEST(ParseOutput, RejectsMalformedSequences) {
    EXPECT_THROW(parse_output(vocab(), std::vector<int>{}, OutputKind::action), ParseError);
    EXPECT_THROW(parse_output(vocab(), ids_of({"Pickup", "None"}), OutputKind::action), ParseError);
    EXPECT_THROW(parse_output(vocab(), ids_of({"MoveAhead", "apple"}), OutputKind::action),
                 ParseError);
    EXPECT_THROW(parse_output(vocab(), ids_of({"Pickup", "apple", "apple"}), OutputKind::action),
                 ParseError);
    EXPECT_THROW(parse_output(vocab(), ids_of({"apple", "Pickup"}), OutputKind::action), ParseError);
    EXPECT_THROW(parse_output(vocab(), std::vector<int>{vocab().stop()}, OutputKind::subgoal),
                 ParseError);
    EXPECT_THROW(parse_output(vocab(), ids_of({"Moveto", "None"}), OutputKind::subgoal), ParseError);
}

TEST(ParseOutput, RoundTripOverFullSpace) {
    // every structured value renders and parses back exactly; all renderings
    // are distinct
    std::vector<int> all_kinds;
    for (int k = 0; k < gh::kNumKinds; ++k) all_kinds.push_back(k);
    auto subgoals = enumerate_outputs(vocab(), OutputKind::subgoal, all_kinds);
    auto actions = enumerate_outputs(vocab(), OutputKind::action, all_kinds);
    for (const auto& list : {subgoals, actions}) {
        std::set<std::vector<int>> rendered;  // injective within each output kind
        for (const auto& p : list) {
            auto reparsed = parse_output(vocab(), p.tokens, p.kind);
            EXPECT_EQ(make_proposal(vocab(), p.kind, reparsed).tokens, p.tokens);
            rendered.insert(p.tokens);
        }
        EXPECT_EQ(rendered.size(), list.size());
    }
}

TEST(EnumerateOutputs, CountMatchesClosedFormula) {
    std::vector<int> ten_kinds;
    for (int k = gh::kNumReceptacleKinds; k < gh::kNumReceptacleKinds + 10; ++k)
        ten_kinds.push_back(k);
    auto actions = enumerate_outputs(vocab(), OutputKind::action, ten_kinds);
    EXPECT_EQ(actions.size(), 5u + 7u * 10u + 1u);  // 76

    auto none = enumerate_outputs(vocab(), OutputKind::action, {});
    EXPECT_EQ(none.size(), 5u + 1u);

    auto subgoals = enumerate_outputs(vocab(), OutputKind::subgoal, ten_kinds);
    EXPECT_EQ(subgoals.size(), 10u * 10u);
}

TEST(EnumerateOutputs, StableOrderAndRankKeys) {
    std::vector<int> kinds = {gh::kind_from_name("apple"), gh::kind_from_name("counter")};
    auto actions = enumerate_outputs(vocab(), OutputKind::action, kinds);
    for (std::size_t i = 1; i < actions.size(); ++i)
        EXPECT_LT(actions[i - 1].rank_key, actions[i].rank_key);
    EXPECT_TRUE(std::holds_alternative<Stop>(actions.back().parsed));
}

TEST(Contexts, PolicyContextStartsWithBosAndRespectsCap) {
    FeedbackParts parts;
    parts.visible = std::vector<std::string>{"apple"};
    auto fb = render_feedback(vocab(), parts, FeedbackMode::visual);
    auto task = build_high_task(vocab(), {"put", "the", "apple", "on", "the", "table"},
                                {"pick", "up", "the", "apple"});
    auto ctx = build_policy_context(vocab(), fb, task);
    ASSERT_FALSE(ctx.empty());
    EXPECT_EQ(ctx[0], vocab().bos());
    EXPECT_LE(int(ctx.size()), kContextCap);
}

TEST(Contexts, LowTaskTruncatesOldestHistory) {
    gh::Subgoal sg{gh::SubgoalType::Pickup, gh::kind_from_name("apple")};
    std::vector<gh::LowLevelAction> past(200, {gh::ActionType::RotateLeft, -1});
    past.push_back({gh::ActionType::Pickup, gh::kind_from_name("apple")});
    auto task = build_low_task(vocab(), sg, past);
    EXPECT_LE(int(task.tokens.size()), kContextCap);
    // the newest action survives truncation
    auto tail = render_action(vocab(), past.back());
    ASSERT_GE(task.tokens.size(), 2u);
    EXPECT_EQ(task.tokens[task.tokens.size() - 2], tail[0]);
    EXPECT_EQ(task.tokens.back(), tail[1]);
}

TEST(Contexts, RewardInputContainsAllSegments) {
    FeedbackParts parts;
    parts.visible = std::vector<std::string>{"cup", "apple"};
    auto fb = render_feedback(vocab(), parts, FeedbackMode::visual);
    auto task = build_high_task(vocab(), {"pick", "up", "the", "apple"}, {"pick", "up", "the",
                                                                          "apple"});
    auto p = make_proposal(vocab(), OutputKind::subgoal,
                           gh::Subgoal{gh::SubgoalType::Pickup, gh::kind_from_name("apple")});
    auto in = build_reward_input(vocab(), fb, task, p.tokens);
    EXPECT_EQ(in[0], vocab().bos());
    // proposal tokens are the suffix
    ASSERT_GE(in.size(), p.tokens.size());
    for (std::size_t i = 0; i < p.tokens.size(); ++i)
        EXPECT_EQ(in[in.size() - p.tokens.size() + i], p.tokens[i]);
}

TEST(Vocab, CoversEverythingTheGeneratorsEmit) {
    const Vocab& v = vocab();
    gh::SceneConfig cfg;
    cfg.noise_prob = 0.5;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto [scene, task] = gridhouse::generate_scene(seed, cfg);
        for (const auto& w : task.instruction.goal_text) EXPECT_TRUE(v.has(w)) << w;
        for (const auto& st : task.instruction.step_texts)
            for (const auto& w : st) EXPECT_TRUE(v.has(w)) << w;
        for (const auto& w : gh::visible_objects(scene)) EXPECT_TRUE(v.has(w)) << w;
        for (const auto& w : gh::caption(scene)) EXPECT_TRUE(v.has(w)) << w;
        for (const auto& w : gh::detected_kinds(scene)) EXPECT_TRUE(v.has(w)) << w;
    }
}
