#include <doctest.h>

#include <regex>

#include <nlohmann/json.hpp>

#include "medsum/corpus.hpp"
#include "medsum/errors.hpp"
#include "support.hpp"

using namespace medsum;

TEST_CASE("parse_dataset reads the documented record shape") {
    auto parsed = parse_dataset(R"([{"id":"a1","inputs":"chest xray shows ...","target":"no acute disease"}])");
    REQUIRE(parsed.entries.size() == 1);
    CHECK(parsed.entries[0].id == "a1");
    CHECK(parsed.entries[0].target == "no acute disease");
    CHECK(parsed.skipped.empty());

    CHECK(parse_dataset("[]").entries.empty());
    CHECK(parse_dataset("  \n").entries.empty());
}

TEST_CASE("parse_dataset accepts JSON lines, mixed-case keys and integer ids") {
    const auto parsed = parse_dataset("{\"ID\": 7, \"Inputs\": \" a b \", \"TARGET\": \"c\"}\n\n{\"id\":\"x\",\"inputs\":\"d\",\"target\":\"\"}\n");
    REQUIRE(parsed.entries.size() == 2);
    CHECK(parsed.entries[0].id == "7");
    CHECK(parsed.entries[0].inputs == "a b");
    CHECK(parsed.entries[1].target.empty());
}

TEST_CASE("strict mode names the offending record; lenient mode skips it") {
    const std::string raw = R"([{"id":"1","inputs":"a","target":"b"},
                                {"id":"2","inputs":"c"},
                                {"id":"3","inputs":"e","target":"f"}])";

    // Hand validator: the index of the first record lacking one of the three string fields.
    std::size_t expected = 99;
    auto arr = nlohmann::json::parse(raw);
    for (std::size_t i = 0; i < arr.size() && expected == 99; ++i)
        for (const char* f : {"id", "inputs", "target"})
            if (!arr[i].contains(f)) expected = i;
    REQUIRE(expected == 1);

    try {
        parse_dataset(raw, Strictness::Strict);
        FAIL("expected RecordError");
    } catch (const RecordError& e) {
        CHECK(e.record_index() == expected);
        CHECK(std::string(e.what()).find("target") != std::string::npos);
    }

    auto lenient = parse_dataset(raw);
    CHECK(lenient.entries.size() == 2);
    REQUIRE(lenient.skipped.size() == 1);
    CHECK(lenient.skipped[0].index == 1);
}

TEST_CASE("duplicate ids and empty inputs are record errors") {
    auto dup = parse_dataset(R"([{"id":"a","inputs":"x","target":"y"},{"id":"a","inputs":"z","target":"w"}])");
    CHECK(dup.entries.size() == 1);
    CHECK(dup.skipped.size() == 1);
    auto empty = parse_dataset(R"([{"id":"a","inputs":"   ","target":"y"}, 5])");
    CHECK(empty.entries.empty());
    CHECK(empty.skipped.size() == 2);
}

TEST_CASE("malformed JSON reports a byte offset") {
    const std::string raw = R"([{"id":"a","inputs":"x","target":"y"},{"id":)";
    try {
        parse_dataset(raw);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.byte_offset() <= raw.size());
        CHECK(e.byte_offset() >= raw.find("{\"id\":", 5));
    }
    const std::string lines = "{\"id\":\"a\",\"inputs\":\"x\",\"target\":\"y\"}\n{\"id\": nope}\n";
    try {
        parse_dataset(lines);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.byte_offset() >= lines.find('\n'));
        CHECK(e.byte_offset() < lines.size());
    }
}

TEST_CASE("serialize_jsonl round-trips") {
    std::vector<DatasetEntry> entries{{"a", "line one\nline \"two\"", "t"}, {"b", "ü", ""}};
    CHECK(parse_dataset(serialize_jsonl(entries)).entries == entries);
    CHECK(serialize_jsonl(entries).substr(0, 12) == R"({"id":"a","i)");
}

TEST_CASE("classify_task") {
    CHECK(classify_task({"1", "Patient: I have a cough\nDoctor: how long?", "cough"}) == TaskKind::Conversation);
    CHECK(classify_task({"2", "I keep getting headaches in the afternoon.", "What causes my headache?"}) ==
          TaskKind::Question);
    CHECK(classify_task({"3", "CT abdomen: no free air. Liver unremarkable.", "No acute findings."}) ==
          TaskKind::Passage);
    CHECK(classify_task({"4", "My knee hurts.", "Should I see a physiotherapist"}) == TaskKind::Question);
    // One speaker marker is not a conversation.
    CHECK(classify_task({"5", "Patient: reports dizziness on standing.", "Orthostatic dizziness."}) ==
          TaskKind::Passage);
}

TEST_CASE("word_count agrees with a regex whitespace split") {
    CHECK(word_count("") == 0);
    CHECK(word_count("no acute disease") == 3);
    const std::regex ws("\\s+");
    for (std::string s : {"  a  b\tc\n", "one", " \t\n ", "x-ray: clear, stable.", "a\r\nb\vc\fd"}) {
        std::size_t oracle = 0;
        for (std::sregex_token_iterator it(s.begin(), s.end(), ws, -1), end; it != end; ++it)
            if (it->length() > 0) ++oracle;
        CHECK_MESSAGE(word_count(s) == oracle, s);
    }
}

TEST_CASE("assign_bucket boundaries and defaults") {
    const auto passage = BucketConfig::defaults(TaskKind::Passage);
    CHECK(assign_bucket(22, passage) == LengthBucket::Short);
    CHECK(assign_bucket(120, passage) == LengthBucket::Long);
    CHECK(assign_bucket(0, passage) == LengthBucket::Short);
    for (TaskKind t : kAllTasks) {
        const auto c = BucketConfig::defaults(t);
        CHECK(assign_bucket(c.short_max, c) == LengthBucket::Short);
        CHECK(assign_bucket(c.short_max + 1, c) == LengthBucket::Medium);
        CHECK(assign_bucket(c.medium_max, c) == LengthBucket::Medium);
        CHECK(assign_bucket(c.medium_max + 1, c) == LengthBucket::Long);
    }
    CHECK(passage.short_max == 39);
    CHECK(passage.medium_max == 92);
    CHECK(BucketConfig::defaults(TaskKind::Question).short_max == 32);
    CHECK(BucketConfig::defaults(TaskKind::Question).medium_max == 93);
    CHECK(BucketConfig::defaults(TaskKind::Conversation).short_max == 1001);
    CHECK(BucketConfig::defaults(TaskKind::Conversation).medium_max == 2182);

    BucketConfig bad{TaskKind::Passage, 50, 50};
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("task and bucket names round-trip") {
    for (TaskKind t : kAllTasks) CHECK(parse_task(to_string(t)) == t);
    for (LengthBucket b : kAllBuckets) CHECK(parse_bucket(to_string(b)) == b);
    CHECK_FALSE(parse_task("summary").has_value());
}
