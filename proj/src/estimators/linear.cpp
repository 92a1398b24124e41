#include "emgfinger/estimators/linear.hpp"

#include <Eigen/Dense>

namespace emgfinger::estimators {

double LinearModel::predict(const FeatureVector& x) const {
  if (!fitted) throw std::logic_error("linear model is not trained");
  return w_flexor * x.flexor + w_extensor * x.extensor + intercept;
}

LinearModel fit_linear(const Dataset& train) {
  const auto n = static_cast<Eigen::Index>(train.size());
  if (n < 3) throw std::invalid_argument("linear fit needs at least 3 samples");
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& x = train.features[static_cast<std::size_t>(i)];
    design(i, 0) = x.flexor;
    design(i, 1) = x.extensor;
    design(i, 2) = 1.0;
    target(i) = train.force[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw RankDeficientError("linear fit: design matrix is rank deficient");
  const Eigen::Vector3d w = qr.solve(target);
  return LinearModel{w(0), w(1), w(2), true};
}

}  // namespace emgfinger::estimators
