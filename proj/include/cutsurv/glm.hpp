#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "cutsurv/errors.hpp"

namespace cutsurv {

struct IrlsOptions {
  int max_iter = 100;
  double tol = 1e-8;  // max absolute coefficient change
};

/// Poisson regression with log link, E[y] = exp(X beta + offset), by
/// iteratively reweighted least squares.
inline Eigen::VectorXd irls_poisson(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                                    const Eigen::VectorXd& offset, const IrlsOptions& opt = {}) {
  const auto n = design.rows();
  const auto k = design.cols();
  if (response.size() != n || offset.size() != n) throw std::invalid_argument("IRLS input sizes disagree");
  if (!offset.allFinite() || !design.allFinite()) throw NumericError("non-finite design or offset");
  if ((response.array() < 0.0).any()) throw std::invalid_argument("Poisson response must be non-negative");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < k) {
    throw NumericError("design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
                       std::to_string(k) + ")");
  }

  // Standard GLM start: mu = y + 0.1.
  Eigen::VectorXd mu = response.array() + 0.1;
  Eigen::VectorXd eta = mu.array().log();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  double last_change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    const Eigen::VectorXd z = (eta - offset).array() + (response - mu).array() / mu.array();
    const Eigen::MatrixXd xtw = design.transpose() * mu.asDiagonal();
    const Eigen::MatrixXd info = xtw * design;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw NumericError("IRLS normal equations are singular");
    const Eigen::VectorXd next = ldlt.solve(xtw * z);
    if (!next.allFinite()) throw NumericError("IRLS produced non-finite coefficients");
    last_change = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    eta = design * beta + offset;
    mu = eta.array().exp();
    if (!mu.allFinite()) throw NumericError("IRLS fitted means overflowed");
    if (it > 0 && last_change < opt.tol) return beta;
  }
  const Eigen::MatrixXd info = design.transpose() * mu.asDiagonal() * design;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(info);
  const auto& sv = svd.singularValues();
  std::ostringstream msg;
  msg << "IRLS did not converge in " << opt.max_iter << " iterations (last change " << last_change
      << ", information condition number " << sv(0) / sv(sv.size() - 1) << ")";
  throw NumericError(msg.str());
}

}  // namespace cutsurv
