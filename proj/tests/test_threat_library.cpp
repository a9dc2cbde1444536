#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace threatsmith;
using namespace threatsmith::testkit;

namespace {

UtcTimestamp stamp(const char* s) { return *parse_timestamp(s); }

LibrarySnapshot random_snapshot(std::mt19937_64& rng) {
    LibrarySnapshot snap;
    snap.fetched_at = UtcTimestamp{std::chrono::seconds(1'600'000'000 + static_cast<long>(rng() % 200'000'000))};
    snap.source_note = "random " + std::to_string(rng() % 1000);
    const auto keywords = rng() % 6;
    for (std::size_t k = 0; k < keywords; ++k) {
        KeywordEntry entry;
        std::set<CveCwePair> pairs;
        const auto n = rng() % 40;
        for (std::size_t i = 0; i < n; ++i)
            pairs.insert({CveId{static_cast<std::uint16_t>(2000 + rng() % 25), 1000 + rng() % 50}, CweId{static_cast<std::uint32_t>(1 + rng() % 30)}});
        entry.pairs.assign(pairs.begin(), pairs.end());
        entry.unmapped_count = rng() % 10;
        snap.entries["keyword " + std::to_string(rng() % 100)] = std::move(entry);
    }
    return snap;
}

}  // namespace

TEST(Snapshot, SaveLoadRoundTripOnRandomSnapshots) {
    TempDir dir;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        auto snap = random_snapshot(rng);
        save_snapshot(snap, dir / "s.json");
        EXPECT_EQ(load_snapshot(dir / "s.json"), snap) << "snapshot " << i;
    }
}

TEST(Snapshot, DoubleSaveIsByteIdentical) {
    TempDir dir;
    auto snap = case_study_snapshot();
    save_snapshot(snap, dir / "a.json");
    save_snapshot(load_snapshot(dir / "a.json"), dir / "b.json");
    EXPECT_EQ(read_file(dir / "a.json"), read_file(dir / "b.json"));
}

TEST(Snapshot, BundledFixtureIsInCanonicalForm) {
    const auto path = data_dir() / "case_study_snapshot.json";
    EXPECT_EQ(serialize_snapshot(load_snapshot(path)), read_file(path));
}

TEST(Snapshot, BundledFixturePopulatesEveryBuiltInKeyword) {
    auto snap = case_study_snapshot();
    EXPECT_EQ(snap.format_version, 1);
    EXPECT_EQ(format_timestamp(snap.fetched_at), "2024-06-01T00:00:00Z");
    for (auto kind : kBuiltinKinds) {
        for (const auto& kw : default_keywords(kind)) {
            const auto* entry = snap.find(kw);
            ASSERT_NE(entry, nullptr) << kw;
            EXPECT_FALSE(entry->pairs.empty()) << kw;
        }
    }
    EXPECT_EQ(snap.entries.at("PLC").total_cves(), 213u);
}

TEST(Snapshot, VersionBumpIsUnsupported) {
    TempDir dir;
    auto doc = read_json(data_dir() / "case_study_snapshot.json");
    doc["format_version"] = 99;
    write_file_atomic(dir / "v99.json", doc.dump());
    try {
        load_snapshot(dir / "v99.json");
        FAIL() << "expected UnsupportedVersion";
    } catch (const UnsupportedVersion& e) {
        EXPECT_EQ(e.version(), 99);
    }
    LibrarySnapshot snap;
    snap.format_version = 99;
    EXPECT_THROW(save_snapshot(snap, dir / "out.json"), UnsupportedVersion);
}

TEST(Snapshot, TruncatedFileIsMalformed) {
    TempDir dir;
    auto text = read_file(data_dir() / "case_study_snapshot.json");
    write_file_atomic(dir / "t.json", text.substr(0, text.size() / 2));
    EXPECT_THROW(load_snapshot(dir / "t.json"), MalformedSnapshot);
}

TEST(Snapshot, DuplicatedTupleIsMalformed) {
    auto doc = nlohmann::json::parse(serialize_snapshot(case_study_snapshot()));
    auto& pairs = doc["entries"]["RTU"]["pairs"];
    pairs.push_back(pairs[0]);
    EXPECT_THROW(snapshot_from_json(doc), MalformedSnapshot);
}

TEST(Snapshot, StructuralViolationsAreMalformed) {
    const auto good = nlohmann::json::parse(serialize_snapshot(case_study_snapshot()));
    auto extra = good;
    extra["surprise"] = 1;
    EXPECT_THROW(snapshot_from_json(extra), MalformedSnapshot);
    auto missing = good;
    missing.erase("source_note");
    EXPECT_THROW(snapshot_from_json(missing), MalformedSnapshot);
    auto sentinel = good;
    sentinel["entries"]["RTU"]["pairs"][0]["cwe"] = "NVD-CWE-noinfo";
    EXPECT_THROW(snapshot_from_json(sentinel), MalformedSnapshot);
    auto negative = good;
    negative["entries"]["RTU"]["unmapped_count"] = -1;
    EXPECT_THROW(snapshot_from_json(negative), MalformedSnapshot);
    EXPECT_THROW(load_snapshot(data_dir() / "no-such-file.json"), IoFailure);
}

// ---------------------------------------------------------------------------
// update_library against a mock source
// ---------------------------------------------------------------------------

namespace {

struct MockSource {
    FakeClock clock;
    std::shared_ptr<FixtureTransport> transport = std::make_shared<FixtureTransport>();
    VulnSource source;

    MockSource() : source(make_config(), transport, nullptr, clock.clock(), clock.sleeper()) {
        transport->searches["PLC"] = {{"CVE-2020-1001", "CVE-2020-1002"}, {"CVE-2021-1003"}};
        transport->searches["RTU"] = {{"CVE-2019-2001"}};
        transport->details["CVE-2020-1001"] = {"CWE-119"};
        transport->details["CVE-2020-1002"] = {"CWE-119", "CWE-287"};
        transport->details["CVE-2021-1003"] = {"NVD-CWE-Other"};
        transport->details["CVE-2019-2001"] = {"CWE-798"};
    }

    static SourceConfig make_config() {
        auto cfg = test_config("key");
        cfg.retry_max = 2;
        return cfg;
    }
};

LibrarySnapshot base_snapshot() {
    LibrarySnapshot snap;
    snap.fetched_at = stamp("2024-01-01T00:00:00Z");
    snap.source_note = "base";
    snap.entries["PLC"] = {{{parse_cve_id("CVE-2020-1001"), CweId{119}}, {parse_cve_id("CVE-2020-1002"), CweId{119}},
                            {parse_cve_id("CVE-2020-1002"), CweId{287}}},
                           1};
    snap.entries["RTU"] = {{{parse_cve_id("CVE-2018-0001"), CweId{20}}}, 0};
    snap.entries["SCADA"] = {{{parse_cve_id("CVE-2017-0001"), CweId{79}}}, 3};
    return snap;
}

UpdateOptions fixed_time(const char* t) {
    UpdateOptions o;
    o.now = [t] { return stamp(t); };
    return o;
}

}  // namespace

TEST(UpdateLibrary, ReplacesOnlyRequestedKeywordWholesale) {
    MockSource mock;
    mock.transport->searches["PLC"].back().push_back("CVE-2021-1004");  // one new CVE upstream
    mock.transport->details["CVE-2021-1004"] = {"CWE-400"};

    const auto before = base_snapshot();
    const auto copy = before;
    auto result = update_library(before, {"PLC"}, mock.source, fixed_time("2024-06-01T00:00:00Z"));

    // Oracle: the expected snapshot built by hand.
    auto expected = before;
    expected.entries["PLC"].pairs.push_back({parse_cve_id("CVE-2021-1004"), CweId{400}});
    expected.fetched_at = stamp("2024-06-01T00:00:00Z");
    EXPECT_EQ(result.snapshot, expected);
    EXPECT_EQ(before, copy);  // input untouched
    ASSERT_EQ(result.outcomes.size(), 1u);
    EXPECT_TRUE(result.outcomes[0].ok);
    EXPECT_EQ(result.outcomes[0].total_cves, 4u);
}

TEST(UpdateLibrary, EmptyKeywordSetOnlyRefreshesTimestamp) {
    MockSource mock;
    auto before = base_snapshot();
    auto result = update_library(before, {}, mock.source, fixed_time("2024-06-01T00:00:00Z"));
    EXPECT_TRUE(same_entries(result.snapshot, before));
    EXPECT_EQ(result.snapshot.source_note, before.source_note);
    EXPECT_EQ(format_timestamp(result.snapshot.fetched_at), "2024-06-01T00:00:00Z");
    EXPECT_EQ(mock.transport->call_count(), 0u);
}

TEST(UpdateLibrary, FailingKeywordKeepsOldEntryAndIsReported) {
    MockSource mock;
    mock.transport->failing_keywords.insert("RTU");
    auto before = base_snapshot();
    auto result = update_library(before, {"PLC", "RTU"}, mock.source);
    EXPECT_EQ(result.failures(), 1u);
    EXPECT_EQ(result.snapshot.entries.at("RTU"), before.entries.at("RTU"));
    EXPECT_TRUE(result.outcomes[0].ok);
    EXPECT_FALSE(result.outcomes[1].ok);
    EXPECT_TRUE(result.outcomes[1].network_error);
    EXPECT_FALSE(result.outcomes[1].error.empty());
}

TEST(UpdateLibrary, IdempotentAgainstUnchangedSource) {
    MockSource mock;
    auto first = update_library(base_snapshot(), {"PLC", "RTU", "new keyword"}, mock.source);
    auto second = update_library(first.snapshot, {"PLC", "RTU", "new keyword"}, mock.source);
    EXPECT_TRUE(same_entries(first.snapshot, second.snapshot));
    EXPECT_TRUE(first.snapshot.entries.at("new keyword").pairs.empty());
}

TEST(UpdateLibrary, ConcurrentWorkersMatchSequentialResult) {
    MockSource a, b;
    auto sequential = update_library(base_snapshot(), {"PLC", "RTU", "SCADA"}, a.source, fixed_time("2024-06-01T00:00:00Z"));
    auto opts = fixed_time("2024-06-01T00:00:00Z");
    opts.workers = 3;
    std::vector<std::size_t> progress;
    opts.progress = [&](std::size_t done, std::size_t) { progress.push_back(done); };
    auto concurrent = update_library(base_snapshot(), {"PLC", "RTU", "SCADA"}, b.source, opts);
    EXPECT_EQ(sequential.snapshot, concurrent.snapshot);
    EXPECT_EQ(progress, (std::vector<std::size_t>{1, 2, 3}));
}

TEST(UpdateLibrary, BlankKeywordRejected) {
    MockSource mock;
    EXPECT_THROW(update_library(base_snapshot(), {"PLC", " "}, mock.source), EmptyKeyword);
}
