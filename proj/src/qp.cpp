#include "mrta/qp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "mrta/errors.hpp"

namespace mrta::qp {

namespace {

// Working factorization: J'N_active = [R; 0] with J J' = H^-1.
struct Factor {
    Eigen::MatrixXd J;
    Eigen::MatrixXd R;
    int q = 0;

    // Rotates columns i and k of J by (c, s).
    void rotate_j(int i, int k, double c, double s) {
        for (Eigen::Index row = 0; row < J.rows(); ++row) {
            const double a = J(row, i);
            const double b = J(row, k);
            J(row, i) = c * a + s * b;
            J(row, k) = -s * a + c * b;
        }
    }

    // d = J' n for the entering normal. Returns false when n is dependent on the active set.
    bool add(Eigen::VectorXd d) {
        const int n = static_cast<int>(J.rows());
        for (int j = n - 1; j > q; --j) {
            const double a = d(j - 1);
            const double b = d(j);
            const double h = std::hypot(a, b);
            if (h == 0.0) continue;
            const double c = a / h;
            const double s = b / h;
            d(j - 1) = h;
            d(j) = 0.0;
            rotate_j(j - 1, j, c, s);
        }
        R.col(q).head(q + 1) = d.head(q + 1);
        ++q;
        return std::abs(d(q - 1)) > 1e-14 * std::max(1.0, d.head(q).cwiseAbs().maxCoeff());
    }

    // Removes active column k and restores R to upper triangular form.
    void remove(int k) {
        for (int col = k; col < q - 1; ++col) R.col(col) = R.col(col + 1);
        R.col(q - 1).setZero();
        for (int j = k; j < q - 1; ++j) {
            const double a = R(j, j);
            const double b = R(j + 1, j);
            const double h = std::hypot(a, b);
            if (h == 0.0) continue;
            const double c = a / h;
            const double s = b / h;
            for (int col = j; col < q - 1; ++col) {
                const double r0 = R(j, col);
                const double r1 = R(j + 1, col);
                R(j, col) = c * r0 + s * r1;
                R(j + 1, col) = -s * r0 + c * r1;
            }
            rotate_j(j, j + 1, c, s);
        }
        --q;
    }
};

}  // namespace

Result solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
             const Options& options) {
    const Eigen::Index n = H.rows();
    const Eigen::Index m = A.rows();
    if (H.cols() != n || g.size() != n || (m > 0 && A.cols() != n) || b.size() != m)
        throw InvalidInput("qp::solve: dimension mismatch");

    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) throw InvalidInput("qp::solve: Hessian is not positive definite");

    Factor f;
    const Eigen::MatrixXd L = llt.matrixL();
    f.J = L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n)).transpose();
    f.R = Eigen::MatrixXd::Zero(n, n);

    Result res;
    Eigen::VectorXd x = llt.solve(-g);
    std::vector<int> active;
    std::vector<double> u;  // multipliers of the active set
    std::vector<char> is_active(static_cast<std::size_t>(m), 0);
    const double inf = std::numeric_limits<double>::infinity();

    auto finish = [&](Status st) {
        res.status = st;
        res.x = x;
        res.objective = 0.5 * x.dot(H * x) + g.dot(x);
        return res;
    };

    while (true) {
        // Most violated inactive constraint.
        int p = -1;
        double worst = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (is_active[static_cast<std::size_t>(i)]) continue;
            const double slack = A.row(i).dot(x) - b(i);
            const double tol = options.tolerance * (1.0 + std::abs(b(i)));
            if (slack < -tol && slack < worst) {
                worst = slack;
                p = static_cast<int>(i);
            }
        }
        if (p < 0) return finish(Status::optimal);

        const Eigen::VectorXd np = A.row(p).transpose();
        std::vector<double> u_plus = u;
        u_plus.push_back(0.0);

        while (true) {
            if (++res.iterations > options.max_iterations) return finish(Status::iteration_limit);

            const int q = f.q;
            const Eigen::VectorXd d = f.J.transpose() * np;
            const Eigen::VectorXd z = f.J.rightCols(n - q) * d.tail(n - q);
            Eigen::VectorXd r(q);
            if (q > 0) r = f.R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

            // Largest dual step keeping active multipliers non-negative.
            double t1 = inf;
            int drop = -1;
            for (int j = 0; j < q; ++j) {
                if (r(j) > 0.0) {
                    const double ratio = u_plus[static_cast<std::size_t>(j)] / r(j);
                    if (ratio < t1) {
                        t1 = ratio;
                        drop = j;
                    }
                }
            }
            // Full primal step that satisfies constraint p.
            double t2 = inf;
            const double zn = z.dot(np);
            if (z.norm() > 1e-12 && zn > 0.0) t2 = -(np.dot(x) - b(p)) / zn;

            const double t = std::min(t1, t2);
            if (t == inf) return finish(Status::infeasible);

            for (int j = 0; j < q; ++j) u_plus[static_cast<std::size_t>(j)] -= t * r(j);
            u_plus[static_cast<std::size_t>(q)] += t;

            if (t2 < inf) x += t * z;

            if (t2 <= t1) {
                if (!f.add(d)) {
                    f.remove(f.q - 1);
                    return finish(Status::infeasible);
                }
                active.push_back(p);
                is_active[static_cast<std::size_t>(p)] = 1;
                u = std::move(u_plus);
                break;
            }

            // Partial step: constraint `drop` leaves the active set.
            is_active[static_cast<std::size_t>(active[static_cast<std::size_t>(drop)])] = 0;
            active.erase(active.begin() + drop);
            u_plus.erase(u_plus.begin() + drop);
            f.remove(drop);
            const double slack_p = np.dot(x) - b(p);
            if (slack_p >= -options.tolerance * (1.0 + std::abs(b(p)))) {
                // Dropping alone satisfied p; resume with a fresh selection.
                u.assign(u_plus.begin(), u_plus.end() - 1);
                break;
            }
        }
    }
}

}  // namespace mrta::qp
