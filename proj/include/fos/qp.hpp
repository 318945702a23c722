#pragma once

// Dense strictly convex QP
//
//     minimize 1/2 z' H z + g' z   subject to   Ain z >= bin
//
// solved with the Goldfarb–Idnani dual active-set method. Starts from the
// unconstrained minimiser and adds violated constraints one at a time, so no
// feasible starting point is needed and infeasibility is detected exactly
// (a violated constraint that no step can reduce).

#include <algorithm>
#include <limits>
#include <vector>

#include "types.hpp"

namespace fos {

struct QpResult {
    Vector z;
    Vector multipliers;          // one per constraint row, zero when inactive
    std::vector<Index> active;   // indices of active rows
    int iterations = 0;
};

class QpInfeasible : public NumericalError {
public:
    using NumericalError::NumericalError;
};

[[nodiscard]] inline QpResult solve_qp(const Matrix& H, const Vector& g, const Matrix& Ain, const Vector& bin,
                                       int max_iterations = 10000) {
    const Index nz = H.rows();
    detail::require_dims(H.cols() == nz && g.size() == nz, "solve_qp: H and g sizes differ");
    detail::require_dims(Ain.cols() == nz && Ain.rows() == bin.size(), "solve_qp: constraint shapes differ");
    const Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) throw NumericalError("solve_qp: Hessian is not positive definite");
    const Matrix Hinv = llt.solve(Matrix::Identity(nz, nz));

    QpResult res;
    res.z = -Hinv * g;
    std::vector<Index> act;
    std::vector<double> u;
    const Index nc = Ain.rows();
    auto slack = [&](Index i) { return Ain.row(i).dot(res.z) - bin[i]; };
    auto violation_tol = [&](Index i) { return 1e-12 * std::max(1.0, std::abs(bin[i])) * std::max(1.0, Ain.row(i).norm()); };

    for (;;) {
        // most violated inactive constraint
        Index p = -1;
        double worst = 0.0;
        for (Index i = 0; i < nc; ++i) {
            if (std::find(act.begin(), act.end(), i) != act.end()) continue;
            const double s = slack(i);
            if (s < -violation_tol(i) && s < worst) {
                worst = s;
                p = i;
            }
        }
        if (p < 0) break;

        double u_plus = 0.0;
        for (;;) {
            if (++res.iterations > max_iterations) throw NumericalError("solve_qp: iteration limit reached");
            const Vector np = Ain.row(p).transpose();
            Vector r;
            Vector dir;
            if (act.empty()) {
                dir = Hinv * np;
            } else {
                Matrix N(nz, static_cast<Index>(act.size()));
                for (std::size_t j = 0; j < act.size(); ++j) N.col(static_cast<Index>(j)) = Ain.row(act[j]).transpose();
                const Matrix HinvN = Hinv * N;
                const Matrix gram = N.transpose() * HinvN;
                r = gram.ldlt().solve(HinvN.transpose() * np);
                dir = Hinv * np - HinvN * r;
            }

            // dual (partial) step: largest t keeping active multipliers >= 0
            double t1 = std::numeric_limits<double>::infinity();
            Index drop = -1;
            for (Index j = 0; j < r.size(); ++j) {
                if (r[j] > 0.0) {
                    const double t = u[static_cast<std::size_t>(j)] / r[j];
                    if (t < t1) {
                        t1 = t;
                        drop = j;
                    }
                }
            }
            // primal (full) step: makes constraint p active
            const double curvature = np.dot(dir);
            const double scale = np.dot(Hinv * np);
            double t2 = std::numeric_limits<double>::infinity();
            if (curvature > 1e-12 * scale) t2 = -slack(p) / curvature;

            if (!std::isfinite(t1) && !std::isfinite(t2))
                throw QpInfeasible("solve_qp: constraints are infeasible");

            if (!std::isfinite(t2)) {
                for (Index j = 0; j < r.size(); ++j) u[static_cast<std::size_t>(j)] -= t1 * r[j];
                u_plus += t1;
                act.erase(act.begin() + drop);
                u.erase(u.begin() + drop);
                continue;
            }
            const double t = std::min(t1, t2);
            res.z += t * dir;
            for (Index j = 0; j < r.size(); ++j) u[static_cast<std::size_t>(j)] -= t * r[j];
            u_plus += t;
            if (t2 <= t1) {
                act.push_back(p);
                u.push_back(u_plus);
                break;
            }
            act.erase(act.begin() + drop);
            u.erase(u.begin() + drop);
        }
    }

    res.multipliers = Vector::Zero(nc);
    for (std::size_t j = 0; j < act.size(); ++j) res.multipliers[act[j]] = std::max(0.0, u[j]);
    res.active = std::move(act);
    return res;
}

}  // namespace fos
