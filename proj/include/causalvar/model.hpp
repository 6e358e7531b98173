#pragma once

#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

namespace causalvar {

/// VAR(p) model x_t = A_1 x_{t-1} + ... + A_p x_{t-p} + eps_t with isotropic
/// innovations, Cov(eps_t) = noiseVariance * I_d. Immutable.
class VarModel {
 public:
  VarModel(std::vector<Eigen::MatrixXd> coeffs, double noiseVariance);

  /// Scalar AR(p) with coefficients a_1..a_p.
  static VarModel scalar(const std::vector<double>& a, double noiseVariance = 1.0);
  static VarModel scalar(std::initializer_list<double> a, double noiseVariance = 1.0) {
    return scalar(std::vector<double>(a), noiseVariance);
  }

  int dim() const noexcept { return dim_; }
  int order() const noexcept { return static_cast<int>(coeffs_.size()); }
  double noiseVariance() const noexcept { return noiseVariance_; }

  /// A_lag for lag in [1, p]; zero block for lag > p.
  Eigen::MatrixXd coeff(int lag) const;
  const std::vector<Eigen::MatrixXd>& coeffs() const noexcept { return coeffs_; }

  /// [A_1 | A_2 | ... | A_order], zero-padded when order > p.
  Eigen::MatrixXd stackedCoeffs(int order = 0) const;

  /// Same process written with `order` >= p lags, the extra blocks zero.
  VarModel padded(int order) const;

  /// Scalar coefficients a_1..a_p (d == 1 only).
  Eigen::VectorXd scalarCoeffs() const;

 private:
  std::vector<Eigen::MatrixXd> coeffs_;
  double noiseVariance_;
  int dim_;
};

}  // namespace causalvar
