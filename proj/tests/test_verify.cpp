#include <gtest/gtest.h>

#include "reslevel/verify.hpp"

using namespace reslevel;

TEST(Verify, LevelNames)
{
    EXPECT_EQ(parse_level("quick"), VerifyLevel::quick);
    EXPECT_EQ(parse_level("full"), VerifyLevel::full);
    EXPECT_EQ(to_string(VerifyLevel::full), "full");
    try {
        (void)parse_level("slow");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "level");
    }
}

TEST(Verify, InjectedGBreaksCpChecks)
{
    VerifyOptions o;
    o.injected_g = 1.5;
    const CheckResult cp = check_cp_criteria(o);
    EXPECT_FALSE(cp.pass);
    EXPECT_NE(cp.detail.find("Choi/|g|"), std::string::npos) << cp.detail;
    EXPECT_FALSE(check_representations(o).pass);
    EXPECT_FALSE(check_sum_rules(o).pass);
}

TEST(Verify, ReportFormat)
{
    VerifyReport r;
    r.checks.push_back({3, "x", true, "ok", 0.5, 5.0});
    r.checks.push_back({4, "y", false, "bad", 0.1, 0.0});
    EXPECT_FALSE(r.passed());
    const std::string text = r.text();
    EXPECT_NE(text.find("PASS criterion 3: x [ok; 0.5 s of 5 s]\n"), std::string::npos) << text;
    EXPECT_NE(text.find("FAIL criterion 4: y [bad; 0.1 s]\n"), std::string::npos) << text;
}
