// Acceptance gate runner: builds the shared reference state, evaluates the
// fourteen criteria, and prints one verdict line each. Exit status is the
// number of failed criteria so the harness can gate on zero.
#include <blowup/acceptance.hpp>

#include <cstdio>
#include <cstdlib>

int main() {
    using namespace blowup;
    int threads = 1;
    if (const char* env = std::getenv("BLOWUP_LAB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 1 && v <= 64) threads = static_cast<int>(v);
    }
    AcceptanceBudget budget;
    const std::uint64_t seed = 0x5eed;
    std::printf("building reference state (n=1 and n=3 plateau runs, %d nodes, "
                "u_max=%.0e)...\n", budget.ref_nodes, budget.ref_u_max);
    std::fflush(stdout);
    AcceptanceContext cx = build_acceptance_context(budget, seed);
    std::printf("reference state ready in %.1fs; running criteria with %d "
                "thread(s)\n\n", cx.build_seconds, threads);
    std::fflush(stdout);

    std::vector<CriterionResult> results = run_acceptance(cx, threads);
    int failed = 0;
    for (const auto& r : results) {
        std::puts(criterion_line(r).c_str());
        if (!r.pass) ++failed;
    }
    std::printf("\n%zu criteria, %d passed, %d failed\n", results.size(),
                static_cast<int>(results.size()) - failed, failed);
    return failed;
}
