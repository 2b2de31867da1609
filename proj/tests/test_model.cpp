#include <doctest.h>

#include "csi/error.hpp"
#include "csi/event_log.hpp"
#include "csi/model.hpp"
#include "helpers.hpp"

using namespace csi;
using csi::testing::make_config;
using csi::testing::make_question;

namespace {

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
    for (const auto& x : v)
        if (x.rule == rule) return true;
    return false;
}

}  // namespace

TEST_CASE("option labels") {
    CHECK(to_string(Option::H) == "H");
    CHECK(parse_option("C") == Option::C);
    CHECK_FALSE(parse_option("c").has_value());
    CHECK_FALSE(parse_option("I").has_value());
    CHECK_THROWS_AS(option_from_string("Z"), Error);
    try {
        option_from_string("");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
    }
}

TEST_CASE("valid config has no violations") {
    CHECK(validate_config(make_config(35, 3)).empty());
}

TEST_CASE("config violations") {
    auto c = make_config(3);
    CHECK(has_rule(validate_config(c), "roster-too-small"));

    c = make_config(10);
    c.roster[3].id = c.roster[2].id;
    CHECK(has_rule(validate_config(c), "duplicate-participant-id:u3"));

    c = make_config(10);
    c.subgroup_min = 8;
    CHECK(has_rule(validate_config(c), "min-exceeds-max"));

    c = make_config(10);
    c.subgroup_target = 9;
    CHECK(has_rule(validate_config(c), "target-out-of-range"));

    c = make_config(10);
    c.questions[0].options.pop_back();
    CHECK(has_rule(validate_config(c), "options-not-eight"));

    c = make_config(10);
    c.questions[0].time_limit_s = 0;
    CHECK(has_rule(validate_config(c), "time-limit-not-positive"));

    c = make_config(10, 2);
    c.questions[1].id = c.questions[0].id;
    CHECK(has_rule(validate_config(c), "duplicate-question-id:q1"));

    c = make_config(10);
    c.conviction_half_life_s = 0;
    CHECK(has_rule(validate_config(c), "not-positive"));
}

TEST_CASE("config json round trip") {
    auto c = make_config(12, 2, 99);
    c.subgroup_count = 3;
    c.relays_enabled = false;
    const json j = c;
    CHECK(j.get<SessionConfig>() == c);
}

TEST_CASE("message json round trip keeps relay meta") {
    Message m{7, 2, "agent-2", "Another group thinks B: x", 1500, RelayMeta{1, Option::B, Color::reinforcing}};
    const json j = m;
    CHECK(j.at("relay_meta").at("color") == "reinforcing");
    CHECK(j.get<Message>() == m);
    Message plain{8, 1, "u1", "I vote C", 10, std::nullopt};
    CHECK(json(plain).get<Message>() == plain);
}

TEST_CASE("redacted question has no key") {
    const auto q = make_question("q9", Option::G);
    const json r = redacted_question_json(q);
    CHECK_FALSE(r.contains("correct_option"));
    CHECK(r.dump().find("correct") == std::string::npos);
    CHECK(r.at("options").size() == 8);
}

TEST_CASE("question bank parse and reject") {
    std::vector<Question> qs{make_question("a", Option::A), make_question("b", Option::H, 120)};
    CHECK(parse_question_bank(question_bank_json(qs)) == qs);

    json bad = question_bank_json(qs);
    bad["questions"][0]["correct_option"] = "Q";
    CHECK_THROWS_AS(parse_question_bank(bad), Error);
    CHECK_THROWS_AS(parse_question_bank(json::array()), Error);
}

TEST_CASE("event log canonical round trip") {
    EventLog log;
    log.append(0, EventKind::session_created, json{{"z", 1}, {"a", "x"}});
    log.append(5, EventKind::message_posted, json{{"message", "hi"}});
    log.append(5, EventKind::question_closed, json::object());
    const auto text = log.to_jsonl();
    CHECK(text.find("{\"kind\":\"session_created\",\"payload\":{\"a\":\"x\",\"z\":1},\"seq\":0,\"t_ms\":0}\n") == 0);
    const auto back = EventLog::from_jsonl(text);
    CHECK(back.to_jsonl() == text);
    CHECK(back.size() == 3);
}

TEST_CASE("event log rejects disorder") {
    EventLog log;
    log.append(10, EventKind::session_created, json::object());
    CHECK_THROWS_AS(log.append(9, EventKind::message_posted, json::object()), Error);

    const std::string gap =
        "{\"kind\":\"session_created\",\"payload\":{},\"seq\":0,\"t_ms\":0}\n"
        "{\"kind\":\"session_created\",\"payload\":{},\"seq\":2,\"t_ms\":0}\n";
    try {
        EventLog::from_jsonl(gap);
        FAIL("expected InvalidLog");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidLog);
    }
    CHECK_THROWS_AS(EventLog::from_jsonl("{\"kind\":\"nope\",\"payload\":{},\"seq\":0,\"t_ms\":0}\n"), Error);
    CHECK_THROWS_AS(EventLog::from_jsonl("not json\n"), Error);
}
