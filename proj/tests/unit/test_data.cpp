#include <doctest.h>

#include <algorithm>
#include <set>

#include "deeptrust/data.hpp"
#include "deeptrust/error.hpp"
#include "deeptrust/synthetic.hpp"
#include "test_support.hpp"

using namespace deeptrust;

namespace {

UserRecord user(const std::string& id, std::uint64_t followers = 10) {
    UserRecord u;
    u.user_id = id;
    u.follower_count = followers;
    return u;
}

MessageRecord message(const std::string& id, const std::string& author, const std::string& text, std::int64_t ts) {
    MessageRecord m;
    m.message_id = id;
    m.author_id = author;
    m.text = text;
    m.timestamp = ts;
    return m;
}

}  // namespace

TEST_CASE("two empty files load as an empty corpus") {
    testing::TempDir dir("data");
    testing::spit(dir.path() / "u.jsonl", "");
    testing::spit(dir.path() / "m.jsonl", "");
    const auto r = load_corpus(dir / "u.jsonl", dir / "m.jsonl");
    CHECK(r.corpus.n() == 0);
    CHECK(r.corpus.messages().empty());
}

TEST_CASE("one user with two messages") {
    testing::TempDir dir("data");
    testing::spit(dir.path() / "u.jsonl", R"({"user_id":"a","follower_count":3})" "\n");
    testing::spit(dir.path() / "m.jsonl",
                  R"({"message_id":"1","author_id":"a","text":"hi #x @b","timestamp":5})" "\n"
                  R"({"message_id":"2","author_id":"a","text":"bye","timestamp":6})" "\n");
    const auto r = load_corpus(dir / "u.jsonl", dir / "m.jsonl");
    CHECK(r.corpus.n() == 1);
    REQUIRE(r.corpus.messages().size() == 2);
    CHECK(r.corpus.users()[0].friend_count == 0);
    CHECK_FALSE(r.corpus.users()[0].verified);
    CHECK(r.corpus.messages()[0].hashtags == std::vector<std::string>{"x"});
    CHECK(r.corpus.messages()[0].mentions == std::vector<std::string>{"b"});
}

TEST_CASE("orphan messages are dropped leniently and fatal when strict") {
    testing::TempDir dir("data");
    testing::spit(dir.path() / "u.jsonl", R"({"user_id":"a","follower_count":3})" "\n");
    testing::spit(dir.path() / "m.jsonl", R"({"message_id":"1","author_id":"zz","text":"x","timestamp":1})" "\n");
    const auto r = load_corpus(dir / "u.jsonl", dir / "m.jsonl");
    CHECK(r.corpus.n() == 1);
    CHECK(r.corpus.messages().empty());
    CHECK(r.stats.orphan_messages == 1);
    CHECK_THROWS_AS(load_corpus(dir / "u.jsonl", dir / "m.jsonl", {.strict = true}), ValidationError);
}

TEST_CASE("malformed lines are counted, or named by line number in strict mode") {
    testing::TempDir dir("data");
    testing::spit(dir.path() / "u.jsonl", R"({"user_id":"a"})" "\n{not json\n" R"({"user_id":"b"})" "\n");
    testing::spit(dir.path() / "m.jsonl", "");
    const auto r = load_corpus(dir / "u.jsonl", dir / "m.jsonl");
    CHECK(r.corpus.n() == 2);
    CHECK(r.stats.malformed_lines == 1);
    try {
        load_corpus(dir / "u.jsonl", dir / "m.jsonl", {.strict = true});
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("unreadable input is an I/O error naming the path") {
    testing::TempDir dir("data");
    try {
        load_corpus(dir / "missing.jsonl", dir / "m.jsonl");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("missing.jsonl") != std::string::npos);
    }
}

TEST_CASE("negative counts are rejected") {
    CHECK_THROWS_AS(parse_user(R"({"user_id":"a","follower_count":-1})"), FormatError);
    CHECK_THROWS_AS(parse_message(R"({"message_id":"1","author_id":"a","text":"x","timestamp":1,"reply_count":-2})"),
                    FormatError);
}

TEST_CASE("load, save, load preserves every field") {
    SynthConfig cfg;
    cfg.users = 40;
    cfg.seed = 3;
    const auto corpus = generate_synthetic(cfg).corpus;
    testing::TempDir dir("data");
    save_corpus(corpus, dir / "u.jsonl", dir / "m.jsonl");
    const auto once = load_corpus(dir / "u.jsonl", dir / "m.jsonl", {.topic = corpus.topic()}).corpus;
    CHECK(once == corpus);
    save_corpus(once, dir / "u2.jsonl", dir / "m2.jsonl");
    CHECK(testing::slurp(dir.path() / "u.jsonl") == testing::slurp(dir.path() / "u2.jsonl"));
    CHECK(testing::slurp(dir.path() / "m.jsonl") == testing::slurp(dir.path() / "m2.jsonl"));
}

TEST_CASE("zero-follower users are removed with their messages") {
    const Corpus c({user("a", 0), user("b", 4)},
                   {message("1", "a", "x", 1), message("2", "a", "y", 2), message("3", "a", "z", 3),
                    message("4", "a", "w", 4), message("5", "a", "v", 5), message("6", "b", "q", 6)});
    FilterStats stats;
    const auto f = filter_corpus(c, kDefaultPerUserCap, &stats);
    REQUIRE(f.n() == 1);
    CHECK(f.users()[0].user_id == "b");
    CHECK(f.messages().size() == 1);
    CHECK(stats.zero_follower_users == 1);
    CHECK(stats.messages_of_removed_users == 5);
}

TEST_CASE("cap keeps the most recent messages") {
    std::vector<MessageRecord> ms;
    for (int i = 0; i < 4000; ++i) ms.push_back(message(std::to_string(i), "a", "text " + std::to_string(i), i));
    const auto f = filter_corpus(Corpus({user("a")}, ms), 3200);
    REQUIRE(f.messages().size() == 3200);
    std::int64_t oldest = f.messages().front().timestamp;
    for (const auto& m : f.messages()) oldest = std::min(oldest, m.timestamp);
    CHECK(oldest == 800);
    CHECK(f.messages().front().timestamp == 3999);
}

TEST_CASE("identical texts by one author are kept once, earliest first") {
    const Corpus c({user("a"), user("b")}, {message("1", "a", "same", 20), message("2", "a", "same ", 10),
                                           message("3", "a", "other", 30), message("4", "b", "same", 5)});
    FilterStats stats;
    const auto f = filter_corpus(c, 10, &stats);
    const auto kept = f.messages_of(0);
    REQUIRE(kept.size() == 2);
    CHECK(std::any_of(kept.begin(), kept.end(), [](const auto& m) { return m.message_id == "2"; }));
    CHECK(f.messages_of(1).size() == 1);
    CHECK(stats.duplicate_messages == 1);
    CHECK(f.duplicates_removed(0) == 1);
}

TEST_CASE("NFC-equivalent texts count as duplicates") {
    const Corpus c({user("a")}, {message("1", "a", "caf\xC3\xA9", 1), message("2", "a", "cafe\xCC\x81", 2)});
    CHECK(filter_corpus(c, 10).messages().size() == 1);
}

TEST_CASE("filter is idempotent and enforces its postconditions") {
    SynthConfig cfg;
    cfg.users = 120;
    cfg.seed = 11;
    cfg.zero_follower_fraction = 0.1;
    const auto corpus = generate_synthetic(cfg).corpus;
    const auto once = filter_corpus(corpus, 10);
    const auto twice = filter_corpus(once, 10);
    CHECK(once == twice);
    for (std::size_t u = 0; u < once.n(); ++u) {
        CHECK(once.users()[u].follower_count >= 1);
        CHECK(once.messages_of(u).size() <= 10);
    }
}

TEST_CASE("computed aggregates sum replies, retweets and mentions by others") {
    auto m1 = message("1", "a", "hello @b @b", 1);
    m1.reply_count = 2;
    m1.retweet_count = 3;
    m1.mentions = {"b", "b"};
    auto m2 = message("2", "b", "self @b", 2);
    m2.mentions = {"b"};
    const auto c = with_computed_aggregates(Corpus({user("a"), user("b")}, {m1, m2}));
    CHECK(c.users()[0].replied_by_others == 2);
    CHECK(c.users()[0].retweeted_by_others == 3);
    CHECK(c.users()[1].mentioned_by_others == 1);
}

TEST_CASE("labels round-trip and reject bad input") {
    testing::TempDir dir("data");
    const LabelSet labels{{"a", Label::trusted}, {"b,c", Label::not_trusted}};
    save_labels(labels, dir / "l.csv");
    CHECK(load_labels(dir / "l.csv") == labels);
    testing::spit(dir.path() / "bad.csv", "user_id,label\na,maybe\n");
    CHECK_THROWS_AS(load_labels(dir / "bad.csv"), FormatError);
    testing::spit(dir.path() / "hdr.csv", "id,label\na,trusted\n");
    CHECK_THROWS_AS(load_labels(dir / "hdr.csv"), FormatError);
}

TEST_CASE("join reports unlabeled users and dangling labels") {
    const Corpus ab({user("A"), user("B")}, {});
    auto r = join_labels(ab, {{"A", Label::trusted}});
    CHECK(r.pairs.size() == 1);
    CHECK(r.unlabeled == 1);
    CHECK(r.dangling == 0);

    const Corpus a({user("A")}, {});
    r = join_labels(a, {{"A", Label::trusted}, {"Z", Label::not_trusted}});
    CHECK(r.pairs.size() == 1);
    CHECK(r.dangling == 1);

    try {
        join_labels(a, {{"Q", Label::trusted}});
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("no labeled users") != std::string::npos);
    }
}

TEST_CASE("split sizes follow floor allocation with the remainder in train") {
    auto s = split_indices(10, {});
    CHECK(s.train.size() == 8);
    CHECK(s.validation.size() == 1);
    CHECK(s.test.size() == 1);

    s = split_indices(100, {0.5, 0.25, 0.25, 4});
    CHECK(s.train.size() == 50);
    CHECK(s.validation.size() == 25);
    CHECK(s.test.size() == 25);

    CHECK_THROWS_AS(split_indices(2, {}), ValidationError);
    CHECK_THROWS_AS(split_indices(10, {0.5, 0.5, 0.5, 0}), ValidationError);
}

TEST_CASE("split partitions are deterministic, disjoint and exhaustive") {
    for (std::size_t n : {10u, 19u, 50u, 101u}) {
        for (std::uint64_t seed : {0u, 1u, 99u}) {
            SplitSpec spec{0.7, 0.2, 0.1, seed};
            const auto a = split_indices(n, spec);
            const auto b = split_indices(n, spec);
            CHECK(a.train == b.train);
            CHECK(a.test == b.test);
            std::multiset<std::size_t> all(a.train.begin(), a.train.end());
            all.insert(a.validation.begin(), a.validation.end());
            all.insert(a.test.begin(), a.test.end());
            CHECK(all.size() == n);
            CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == n);
            // validation and test never exceed their exact share; each is within 1 below it
            CHECK(static_cast<double>(a.validation.size()) <= n * 0.2 + 1e-9);
            CHECK(static_cast<double>(a.validation.size()) > n * 0.2 - 1.0);
            CHECK(static_cast<double>(a.test.size()) <= n * 0.1 + 1e-9);
            CHECK(static_cast<double>(a.test.size()) > n * 0.1 - 1.0);
        }
    }
}

TEST_CASE("stratified split keeps class proportions per partition") {
    std::vector<int> y(100);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = i < 30 ? 1 : 0;
    SplitSpec spec{0.8, 0.1, 0.1, 5, true};
    const auto s = split_indices(100, spec, y);
    const auto positives = [&](const std::vector<std::size_t>& idx) {
        return std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return y[i] == 1; });
    };
    CHECK(positives(s.test) == 3);
    CHECK(positives(s.validation) == 3);
    CHECK(positives(s.train) == 24);
}
