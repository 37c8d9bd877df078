#include <cstdio>
#include <exception>

#include "fcm/experiments.hpp"

int main() {
  int failed = 0;
  for (const auto& e : fcm::experiments()) {
    try {
      const auto result = fcm::run_experiment(e.name);
      std::fputs(fcm::format_result(result).c_str(), stdout);
      if (!result.passed()) ++failed;
    } catch (const std::exception& ex) {
      std::printf("FAIL criterion %d %s\n    [error] %s\n", e.criterion, e.name.c_str(), ex.what());
      ++failed;
    }
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, fcm::experiments().size());
  return failed == 0 ? 0 : 1;
}
