#include "fcm/downsample.hpp"

#include <cmath>
#include <string>

#include "fcm/error.hpp"
#include "fcm/parallel.hpp"

namespace fcm {

CoefficientLayout FlmDataset::layout() const {
  std::vector<std::size_t> points;
  for (double a : lags) points.push_back(steps_in(a, step));
  return CoefficientLayout(step, d, std::move(points));
}

FlmDataset to_flm(const Design& design, double U) {
  if (!(U > 0.0) || !std::isfinite(U)) throw Error(ErrorCode::invalid_argument, "U must be positive");
  std::size_t stride = 0;
  try {
    stride = steps_in(U, design.step());
  } catch (const Error&) {
    throw Error(ErrorCode::invalid_argument, "U = " + std::to_string(U) + " is not a multiple of the step");
  }
  if (stride == 0) throw Error(ErrorCode::invalid_argument, "U must be at least one step");

  const std::size_t first = design.first_index();
  std::vector<std::vector<FlmRow>> per_obs(design.n());
  parallel_for(design.n(), [&](std::size_t i) {
    const auto& obs = design.observation(i);
    const std::size_t count = (obs.y.size() - 1 - first) / stride + 1;
    auto& rows = per_obs[i];
    rows.reserve(count);
    for (std::size_t l = 0; l < count; ++l) {
      const std::size_t m = first + l * stride;
      FlmRow row{i, l, obs.y.t(m), obs.y[m], obs.z, {}};
      for (std::size_t j = 0; j < design.p(); ++j) {
        std::vector<double> w(design.lag_points(j) + 1);
        for (std::size_t q = 0; q < w.size(); ++q) w[q] = obs.x[j][m - q];
        row.windows.emplace_back(0.0, design.step(), std::move(w));
      }
      rows.push_back(std::move(row));
    }
  });

  FlmDataset data;
  data.U = static_cast<double>(stride) * design.step();
  data.step = design.step();
  data.lags = design.lags();
  data.d = design.d();
  for (auto& rows : per_obs) {
    data.counts.push_back(rows.size());
    for (auto& r : rows) data.rows.push_back(std::move(r));
  }
  if (data.rows.empty()) throw Error(ErrorCode::domain, "no sampling time falls in [alpha*, T_i]");
  return data;
}

namespace {

void check_row(const FlmDataset& data, const FlmRow& row) {
  if (row.z.size() != data.d || row.windows.size() != data.lags.size()) {
    throw Error(ErrorCode::shape, "row " + std::to_string(row.l) + " of observation " +
                                      std::to_string(row.observation) + " does not match the dataset");
  }
}

Eigen::RowVectorXd row_vector(const FlmDataset& data, const CoefficientLayout& layout, const FlmRow& row) {
  check_row(data, row);
  Eigen::RowVectorXd a(static_cast<Eigen::Index>(layout.size()));
  a[0] = 1.0;
  for (std::size_t k = 0; k < data.d; ++k) a[static_cast<Eigen::Index>(k + 1)] = row.z[k];
  for (std::size_t j = 0; j < row.windows.size(); ++j) {
    const auto& win = row.windows[j];
    if (win.size() != layout.covariate_size(j)) throw Error(ErrorCode::shape, "window length mismatch");
    const auto w = trapezoid_weights(win.size(), data.step);
    const std::size_t off = layout.covariate_offset(j);
    for (std::size_t q = 0; q < win.size(); ++q) a[static_cast<Eigen::Index>(off + q)] = w[q] * win[q];
  }
  return a;
}

}  // namespace

double flm_predict(const FlmDataset& data, const FlmRow& row, const CoefficientSet& coef) {
  const auto layout = data.layout();
  return row_vector(data, layout, row).dot(layout.pack(coef));
}

GramSystem flm_system(const FlmDataset& data) {
  const auto layout = data.layout();
  const auto rows = static_cast<Eigen::Index>(data.rows.size());
  Eigen::MatrixXd A(rows, static_cast<Eigen::Index>(layout.size()));
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = data.rows[static_cast<std::size_t>(r)];
    A.row(r) = row_vector(data, layout, row);
    y[r] = row.y;
  }
  GramSystem sys = empty_system(layout);
  accumulate(sys, A, Eigen::VectorXd::Ones(rows), y);
  return sys;
}

CoefficientSet fit_flm(const FlmDataset& data, double lambda, double pivot_tol) {
  return solve_penalized(flm_system(data), lambda, pivot_tol);
}

}  // namespace fcm
