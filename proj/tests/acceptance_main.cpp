// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
#include <cstdio>
#include <cstdlib>
#include <string>

#include "msiph/acceptance.hpp"

int main(int argc, char** argv) {
    std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
    auto results = msiph::run_criteria(seed);
    results.push_back(msiph::run_determinism(seed));
    int failed = 0;
    for (const auto& r : results) {
        bool ok = r.pass(true);
        failed += !ok;
        std::printf("[%s] criterion %d: %s (%.2f s", ok ? "PASS" : "FAIL", r.id, r.title.c_str(), r.elapsed_s);
        if (r.runtime_limit_s > 0) std::printf(", limit %.0f s", r.runtime_limit_s);
        std::printf(")\n");
        for (const auto& c : r.checks)
            std::printf("        %s %s: %s\n", c.pass ? "ok  " : "BAD ", c.name.c_str(), c.detail.c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
    return failed == 0 ? 0 : 1;
}
