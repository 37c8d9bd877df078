#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "fcm/error.hpp"
#include "fcm/grid_function.hpp"

namespace fcm::test {

inline constexpr double pi = 3.14159265358979323846;

// Runs fn and expects an fcm::Error carrying `code`.
inline ::testing::AssertionResult throws_code(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == code) return ::testing::AssertionSuccess();
    return ::testing::AssertionFailure() << "code " << to_string(e.code()) << " (" << e.what() << ")";
  }
  return ::testing::AssertionFailure() << "no exception";
}

inline GridFunction grid(double start, double step, std::size_t count, const std::function<double(double)>& f) {
  return GridFunction::sample(start, step, count, f);
}

inline double max_abs(const GridFunction& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace fcm::test
