#pragma once

#include <Eigen/Dense>

namespace dicode {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

}  // namespace dicode
