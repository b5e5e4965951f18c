#pragma once

#include <Eigen/Dense>

namespace mrta::qp {

enum class Status { optimal, infeasible, iteration_limit };

struct Result {
    Status status = Status::infeasible;
    Eigen::VectorXd x;
    double objective = 0.0;
    int iterations = 0;
};

struct Options {
    int max_iterations = 200;
    double tolerance = 1e-10;
};

// Solves  min 0.5 x'Hx + g'x  s.t.  A x >= b
// for symmetric positive definite H, using the Goldfarb-Idnani dual
// active-set method. Rows of A are constraint normals.
Result solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
             const Options& options = {});

}  // namespace mrta::qp
