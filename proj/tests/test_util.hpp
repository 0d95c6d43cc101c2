#pragma once

#include <Eigen/Core>
#include <Eigen/QR>

#include "rce/point_set.hpp"
#include "rce/rng.hpp"

namespace testutil {

inline rce::RowMatrixXd gaussian_points(rce::Rng& rng, Eigen::Index n, int d,
                                        double scale = 1.0) {
  rce::RowMatrixXd pts(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = scale * rng.normal();
  return pts;
}

inline Eigen::MatrixXd random_psd(rce::Rng& rng, int k, double ridge = 1e-3) {
  Eigen::MatrixXd g(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) g(i, j) = rng.normal();
  Eigen::MatrixXd p = g * g.transpose() / k;
  p.diagonal().array() += ridge;
  return ((p + p.transpose()) / 2.0).eval();
}

inline Eigen::MatrixXd random_rotation(rce::Rng& rng, int d) {
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace testutil
