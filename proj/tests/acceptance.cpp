// Acceptance battery: one line per criterion, nonzero exit if any fails.
#include <cstdio>
#include <cstring>

#include "kdvlab/verify.hpp"

int main(int argc, char** argv) {
  const auto level = (argc > 1 && std::strcmp(argv[1], "fast") == 0) ? kdvlab::VerifyLevel::fast : kdvlab::VerifyLevel::full;
  const auto rep = kdvlab::verify_suite(level, [](const kdvlab::CriterionResult& r) {
    std::printf("%s\n", kdvlab::format_line(r).c_str());
    std::fflush(stdout);
  });
  int failed = 0;
  for (const auto& c : rep.criteria) failed += !c.skipped && !c.passed;
  std::printf("%d of %zu criteria passed\n", static_cast<int>(rep.criteria.size()) - failed, rep.criteria.size());
  return failed == 0 ? 0 : 1;
}
