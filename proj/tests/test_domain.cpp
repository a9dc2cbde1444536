#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace threatsmith;

TEST(CweId, ParsesCanonicalText) {
    auto w = parse_cwe_id("CWE-119");
    ASSERT_TRUE(std::holds_alternative<CweId>(w));
    EXPECT_EQ(std::get<CweId>(w).number, 119u);
    EXPECT_EQ(to_string(w), "CWE-119");
}

TEST(CweId, NvdSentinelsAreUnmapped) {
    for (const char* s : {"NVD-CWE-noinfo", "NVD-CWE-Other"}) {
        auto w = parse_cwe_id(s);
        ASSERT_TRUE(std::holds_alternative<UnmappedWeakness>(w)) << s;
        EXPECT_EQ(to_string(w), s);
        EXPECT_FALSE(is_mapped(w));
    }
}

TEST(CweId, RejectsMalformedText) {
    for (const char* s : {"CWE-", "CWE-0", "CWE-x1", "119", "CWE119", "", "NVD-CWE-nothing", "CWE--1", "CWE-1 2"})
        EXPECT_THROW(parse_cwe_id(s), MalformedIdentifier) << s;
    EXPECT_THROW(parse_mapped_cwe_id("NVD-CWE-noinfo"), MalformedIdentifier);
}

TEST(CweId, CanonicalizesLooseInput) {
    EXPECT_EQ(to_string(parse_cwe_id("cwe-079")), "CWE-79");
    EXPECT_EQ(to_string(parse_cwe_id("  CWE-20 ")), "CWE-20");
}

TEST(CveId, ParsesAndRendersCanonically) {
    EXPECT_EQ(parse_cve_id("CVE-2014-0160").str(), "CVE-2014-0160");
    EXPECT_EQ(parse_cve_id("CVE-2021-44228").str(), "CVE-2021-44228");
    EXPECT_EQ(parse_cve_id("cve-2021-44228").str(), "CVE-2021-44228");
    for (const char* s : {"CVE-2014-160", "CVE-14-0160", "CVE-2014-01600", "CVE-abcd-1234", "CVE-1990-1234",
                          "CVE-2014_0160", "CVE-2014-"})
        EXPECT_THROW(parse_cve_id(s), MalformedIdentifier) << s;
}

TEST(CveId, OrdersByYearThenSequence) {
    EXPECT_LT(parse_cve_id("CVE-2019-99999"), parse_cve_id("CVE-2020-0001"));
    EXPECT_LT(parse_cve_id("CVE-2020-0999"), parse_cve_id("CVE-2020-1000"));
    EXPECT_LT(parse_cve_id("CVE-2020-9999"), parse_cve_id("CVE-2020-10000"));
}

// render(parse(x)) == x over randomly generated canonical texts.
TEST(Identifiers, RoundTripProperty) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 5000; ++i) {
        const auto cwe = "CWE-" + std::to_string(1 + rng() % 2000);
        EXPECT_EQ(to_string(parse_cwe_id(cwe)), cwe);

        const int year = 1999 + static_cast<int>(rng() % 30);
        const int digits = 4 + static_cast<int>(rng() % 4);
        std::string seq;
        for (int d = 0; d < digits; ++d) seq.push_back(static_cast<char>('0' + rng() % 10));
        if (digits > 4 && seq[0] == '0') seq[0] = '1';
        const auto cve = "CVE-" + std::to_string(year) + "-" + seq;
        EXPECT_EQ(parse_cve_id(cve).str(), cve);
    }
}

TEST(CveRecord, NormalizeDropsDuplicateWeaknessesAndChecksSeverity) {
    CveRecord r{parse_cve_id("CVE-2020-1234"), "x",
                {parse_cwe_id("CWE-119"), parse_cwe_id("NVD-CWE-Other"), parse_cwe_id("CWE-119")}, std::nullopt, 7.5};
    r.normalize();
    EXPECT_EQ(r.weakness_ids.size(), 2u);
    EXPECT_EQ(r.mapped_weaknesses(), std::vector<CweId>{CweId{119}});

    r.severity = 10.5;
    EXPECT_THROW(r.normalize(), Error);
}

TEST(Timestamps, FormatAndParseRoundTrip) {
    auto t = parse_timestamp("2024-06-01T13:45:09Z");
    ASSERT_TRUE(t);
    EXPECT_EQ(format_timestamp(*t), "2024-06-01T13:45:09Z");
    EXPECT_FALSE(parse_timestamp("2024-02-30T00:00:00Z"));
    EXPECT_FALSE(parse_timestamp("2024-06-01 13:45:09"));
    auto d = parse_date("2021-03-04T05:06:07.890");
    ASSERT_TRUE(d);
    EXPECT_EQ(format_date(*d), "2021-03-04");
}

TEST(ComponentKind, BuiltInSetIsExactlySeven) {
    std::vector<std::string> names;
    for (auto k : kBuiltinKinds) names.emplace_back(kind_name(k));
    EXPECT_EQ(names, (std::vector<std::string>{"PLC", "SCADA", "HMI", "Sensor", "Actuator", "RTU", "IED"}));
    EXPECT_EQ(parse_builtin_kind("sensor"), BuiltinKind::Sensor);
    EXPECT_THROW(parse_builtin_kind("XYZ"), UnknownKind);
    for (auto k : kBuiltinKinds) EXPECT_FALSE(default_keywords(k).empty());
}

TEST(ValidateScope, CaseStudyScopeIsValid) {
    auto scope = case_study_scope();
    ASSERT_EQ(scope.components.size(), 5u);
    EXPECT_TRUE(validate_scope(scope).empty());
}

TEST(ValidateScope, EmptyScopeIsAViolation) {
    auto v = validate_scope(Scope{"empty", {}, {}});
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].code, ScopeViolation::Code::EmptyScope);
    EXPECT_EQ(v[0].message, "empty scope");
}

TEST(ValidateScope, DuplicateCustomNameAfterTrimAndCase) {
    Scope scope{"s", {}, {}};
    scope.components.push_back({"a", CustomKind{"historian", ""}, "historian", {"historian"}});
    scope.components.push_back({"b", CustomKind{"  Historian ", ""}, "Historian", {"historian"}});
    auto v = validate_scope(scope);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].code, ScopeViolation::Code::DuplicateCustomName);
}

TEST(ValidateScope, ReportsEveryViolation) {
    Scope scope{"s", {}, {}};
    scope.components.push_back({"a", CustomKind{"historian", ""}, "h", {"historian"}});
    scope.components.push_back({"a", CustomKind{"historian", ""}, "h", {" "}});
    scope.components.push_back({"c", BuiltinKind::PLC, "PLC", {}});
    auto v = validate_scope(scope);
    std::vector<ScopeViolation::Code> codes;
    for (const auto& x : v) codes.push_back(x.code);
    using C = ScopeViolation::Code;
    EXPECT_EQ(codes, (std::vector<C>{C::DuplicateId, C::DuplicateCustomName, C::EmptyKeywords, C::EmptyKeywords}));
}

TEST(ScopeEditing, AddRemoveAndIds) {
    Scope scope{"s", {}, {}};
    EXPECT_EQ(add_builtin_component(scope, BuiltinKind::PLC).id, "c1");
    EXPECT_EQ(scope.components[0].keywords, default_keywords(BuiltinKind::PLC));
    EXPECT_EQ(add_custom_component(scope, "data historian", "plant historian").id, "c2");
    EXPECT_EQ(scope.components[1].keywords, std::vector<std::string>{"data historian"});
    EXPECT_THROW(add_custom_component(scope, " Data Historian", ""), DuplicateCustomName);
    remove_component(scope, "c1");
    EXPECT_EQ(add_builtin_component(scope, BuiltinKind::RTU, "Field RTU", {"rtu", " rtu "}).id, "c1");
    EXPECT_EQ(scope.components.back().keywords, std::vector<std::string>{"rtu"});
    EXPECT_THROW(remove_component(scope, "c9"), UnknownComponent);
}

TEST(ScopeFile, SaveLoadRoundTrip) {
    testkit::TempDir dir;
    auto scope = case_study_scope(*parse_timestamp("2024-06-01T00:00:00Z"));
    add_custom_component(scope, "data historian", "stores process values");
    save_scope_file(scope, dir / "scope.json");
    EXPECT_EQ(load_scope_file(dir / "scope.json"), scope);
    EXPECT_THROW(load_scope_file(dir / "missing.json"), MissingScopeFile);
}

TEST(ScopeFile, BundledCaseStudyScopeMatchesBuiltIn) {
    auto scope = load_scope_file(testkit::data_dir() / "case_study_scope.json");
    EXPECT_EQ(scope, case_study_scope(*parse_timestamp("2024-06-01T00:00:00Z")));
    EXPECT_EQ(serialize_scope(scope), read_file(testkit::data_dir() / "case_study_scope.json"));
}
