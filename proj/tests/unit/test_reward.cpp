#include <doctest.h>

#include <cmath>
#include <random>

#include "georl/reward.hpp"

using namespace georl;

namespace {

// One-line restatement of the band criterion.
double band_oracle(double p, double t, double band = 0.01) { return std::abs(p - t) / std::abs(t) <= band ? 1.0 : 0.0; }

std::string boxed(const std::string& payload) { return "<think>work</think> \\boxed{" + payload + "}"; }

}  // namespace

TEST_CASE("extract_final_answer examples") {
    auto e = extract_final_answer("<think>steps</think> \\boxed{42}");
    REQUIRE(e);
    CHECK(e->payload == "42");
    CHECK(e->think_ok);

    e = extract_final_answer("\\boxed{1} then \\boxed{2}");
    REQUIRE(e);
    CHECK(e->payload == "2");
    CHECK_FALSE(e->think_ok);

    CHECK_FALSE(extract_final_answer("no box here"));
}

TEST_CASE("extraction fixtures") {
    struct Case {
        const char* text;
        const char* payload;  // nullptr: Unextractable
        bool think_ok;
    };
    const Case cases[] = {
        {"\\boxed{\\frac{1}{2}}", "\\frac{1}{2}", false},
        {"\\boxed{a{b}c}", "a{b}c", false},
        {"\\boxed{\\{1,2\\}}", "\\{1,2\\}", false},
        {"\\boxed{1} and \\boxed{unclosed", "1", false},
        {"\\boxed{unclosed", nullptr, false},
        {"\\boxed{}", "", false},
        {"<think>a</think><think>b</think>\\boxed{7}", "7", true},
        {"\\boxed{7}<think>late</think>", "7", false},
        {"<think>never closed \\boxed{7}", "7", false},
        {"<think>x</think> \\boxed{1} <think>y</think> \\boxed{2}", "2", true},
        {"</think><think>\\boxed{3}", "3", false},
        {"\\boxed {5}", nullptr, false},
        {"\\boxed{ 5 }", " 5 ", false},
        {"", nullptr, false},
    };
    for (const auto& c : cases) {
        CAPTURE(c.text);
        const auto e = extract_final_answer(c.text);
        if (!c.payload) {
            CHECK_FALSE(e);
            continue;
        }
        REQUIRE(e);
        CHECK(e->payload == c.payload);
        CHECK(e->think_ok == c.think_ok);
    }
}

TEST_CASE("numeric_band_reward examples") {
    CHECK(numeric_band_reward(100.5, 100) == 1.0);
    CHECK(numeric_band_reward(7, 7) == 1.0);
    CHECK(numeric_band_reward(102, 100) == 0.0);
    CHECK(numeric_band_reward(101, 100) == 1.0);
    CHECK(numeric_band_reward(-101, -100) == 1.0);
    CHECK(numeric_band_reward(1e-10, 0) == 1.0);
    CHECK(numeric_band_reward(1e-8, 0) == 0.0);
}

TEST_CASE("band matches the oracle, is monotone and scale invariant") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> mag(-6, 6), rel(-0.03, 0.03);
    for (int i = 0; i < 10000; ++i) {
        const double t = std::copysign(std::pow(10.0, mag(rng)), rel(rng));
        const double p = t * (1 + rel(rng));
        CHECK(numeric_band_reward(p, t) == band_oracle(p, t));
        const double farther = p + (p - t);
        if (std::abs(farther - t) >= std::abs(p - t)) CHECK(numeric_band_reward(farther, t) <= numeric_band_reward(p, t));
        // Powers of two scale exactly, so the relative error is unchanged bit for bit.
        const double s = std::ldexp(1.0, static_cast<int>(rng() % 40) - 20) * (rng() % 2 ? 1 : -1);
        CHECK(numeric_band_reward(s * p, s * t) == numeric_band_reward(p, t));
    }
}

TEST_CASE("constant-expression payloads: evaluate then band") {
    struct Case {
        const char* payload;
        double exact;  // hand-computed value of the payload
        double gold;
    };
    const Case cases[] = {
        {"3", 3, 3},
        {"\\frac{6}{2}", 3, 3},
        {"3.02", 3.02, 3},
        {"3.04", 3.04, 3},
        {"2\\sqrt{2}", 2 * std::sqrt(2.0), 2.828},
        {"\\sqrt{2}", std::sqrt(2.0), 1.5},
        {"\\pi", M_PI, 3.14},
        {"\\frac{22}{7}", 22.0 / 7.0, 3.14159},
        {"10\\sqrt{3}", 10 * std::sqrt(3.0), 17.32},
        {"x=5", 5, 5},
        {"-4", -4, 4},
        {"-4", -4, -4},
        {"\\frac{1}{3}", 1.0 / 3.0, 0.333},
        {"0.5", 0.5, 0.5},
        {"2^{3}", 8, 8},
        {"\\frac{\\sqrt{3}}{4}\\cdot 4", std::sqrt(3.0), 1.732},
        {"45^{\\circ}", 45, 45},
        {"60°", 60, 60},
        {"\\frac{4}{3}\\pi \\cdot 27", 36 * M_PI, 113.1},
        {"1.5e2", 150, 150},
    };
    for (const auto& c : cases) {
        CAPTURE(c.payload);
        const auto v = payload_value(c.payload);
        REQUIRE(v);
        CHECK(*v == doctest::Approx(c.exact).epsilon(1e-12));
        const auto b = score_response(boxed(c.payload), Answer::numeric(c.gold));
        CHECK(b.answer_reward == band_oracle(c.exact, c.gold));
        CHECK(b.rule_fired == (b.answer_reward == 1.0 ? RewardRule::NumericBand : RewardRule::NoMatch));
    }
    CHECK_FALSE(payload_value("x"));
    CHECK_FALSE(payload_value(""));
    CHECK_FALSE(payload_value("\\sqrt{-1}"));
}

TEST_CASE("score_response examples") {
    const RewardConfig cfg;
    auto b = score_response(boxed("(2r)\\pi"), Answer::expression("2\\pi r"));
    CHECK(b.answer_reward == 1.0);
    CHECK(b.rule_fired == RewardRule::SymbolicMatch);

    b = score_response(boxed("B"), Answer::choice('B'));
    CHECK(b.total == 1.0 + cfg.format_weight);
    CHECK(b.rule_fired == RewardRule::ChoiceMatch);

    b = score_response(boxed("\\frac{6}{2}"), Answer::numeric(3.0));
    CHECK(b.answer_reward == 1.0);
}

TEST_CASE("choice matching tolerates formatting noise") {
    for (const char* p : {"b", "B.", "(B)", "\\text{B}", "\\textbf{(b)}", " B "})
        CHECK(score_response(boxed(p), Answer::choice('B')).answer_reward == 1.0);
    for (const char* p : {"C", "BC", "B or C", "1"}) CHECK(score_response(boxed(p), Answer::choice('B')).answer_reward == 0.0);
}

TEST_CASE("format reward") {
    const Answer gold = Answer::choice('A');
    CHECK(score_response("\\boxed{A}", gold).format_reward == 0.0);
    CHECK(score_response("<think>x</think>\\boxed{A}", gold).format_reward == 1.0);
    RewardConfig lax;
    lax.require_think_tags = false;
    CHECK(score_response("\\boxed{A}", gold, lax).format_reward == 1.0);
    const auto none = score_response("<think>x</think> the answer is A", gold);
    CHECK(none.rule_fired == RewardRule::Unextractable);
    CHECK(none.total == 0.0);
}

TEST_CASE("a 5 percent error earns nothing") {
    const auto b = score_response(boxed("105"), Answer::numeric(100));
    CHECK(b.answer_reward == 0.0);
    CHECK(b.rule_fired == RewardRule::NoMatch);
}

TEST_CASE("unparsable payloads are NoMatch") {
    const auto b = score_response(boxed("1+"), Answer::expression("x"));
    CHECK(b.rule_fired == RewardRule::NoMatch);
    CHECK(b.answer_reward == 0.0);
    CHECK(b.format_reward == 1.0);
}

TEST_CASE("totals stay in the four-value range") {
    const RewardConfig cfg;
    const std::vector<Answer> golds = {Answer::choice('C'), Answer::numeric(12.5), Answer::expression("\\frac{\\pi}{2}")};
    const std::vector<std::string> texts = {
        "", "\\boxed{C}", "<think></think>\\boxed{c}", "\\boxed{12.5}", "<think>a</think>\\boxed{\\frac{25}{2}}",
        "\\boxed{\\pi/2}", "<think>q</think>\\boxed{0.5\\pi}", "\\boxed{", "}{\\boxed{}}", "<think>\\boxed{9}</think>"};
    for (const auto& g : golds) {
        for (const auto& t : texts) {
            const auto b = score_response(t, g, cfg);
            CHECK((b.answer_reward == 0.0 || b.answer_reward == 1.0));
            CHECK(b.total == b.answer_reward + cfg.format_weight * b.format_reward);
            if (b.rule_fired == RewardRule::NoMatch || b.rule_fired == RewardRule::Unextractable)
                CHECK(b.answer_reward == 0.0);
        }
    }
}

TEST_CASE("score_batch") {
    CHECK(score_batch({}, {}).empty());
    CHECK_THROWS_AS(score_batch({"a"}, {}), LengthMismatch);
    std::vector<std::string> texts;
    std::vector<Answer> golds;
    std::mt19937_64 rng(4);
    for (int i = 0; i < 300; ++i) {
        const int v = static_cast<int>(rng() % 5);
        texts.push_back((rng() % 2 ? "<think>t</think>" : "") + std::string("\\boxed{") + std::to_string(v) + "}");
        golds.push_back(i % 2 ? Answer::numeric(rng() % 5) : Answer::expression(std::to_string(rng() % 5)));
    }
    std::vector<RewardBreakdown> sequential;
    for (std::size_t i = 0; i < texts.size(); ++i) sequential.push_back(score_response(texts[i], golds[i]));
    CHECK(score_batch(texts, golds, {}, 1) == sequential);
    CHECK(score_batch(texts, golds, {}, 4) == sequential);
}

TEST_CASE("config validation") {
    RewardConfig c;
    c.numeric_band = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = {};
    c.format_weight = -1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
