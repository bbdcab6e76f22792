// Acceptance run: every criterion at the full level, one PASS/FAIL line each.
#include <cstdio>
#include <iostream>

#include "reslevel/verify.hpp"

int main()
{
    using namespace reslevel;
    VerifyOptions o;
    o.level = VerifyLevel::full;
    const VerifyReport report = run_verify(o, [](const CheckResult& c) {
        VerifyReport one;
        one.checks.push_back(c);
        std::cout << one.text() << std::flush;
    });
    std::cout << (report.passed() ? "all criteria passed" : "criteria failed") << '\n';
    return report.passed() ? 0 : 1;
}
