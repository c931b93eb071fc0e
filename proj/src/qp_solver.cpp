#include "harvest/qp_solver.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace harvest {

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::IterationLimit: return "iteration_limit";
    case QpStatus::InvalidProblem: return "invalid_problem";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Working state of the dual method. J holds the orthogonal factor of L^{-T}
// after Givens updates; the first `iq` columns of R form the triangular factor
// of the active normals.
struct ActiveSet {
  Eigen::MatrixXd J;
  Eigen::MatrixXd R;
  std::vector<int> A;  // constraint id per active slot; equalities are -(i+1)
  Eigen::VectorXd u;   // multiplier per active slot
  int iq = 0;
  double r_norm = 1.0;
};

bool add_constraint(ActiveSet& s, Eigen::VectorXd& d) {
  const int n = static_cast<int>(d.size());
  for (int j = n - 1; j >= s.iq + 1; --j) {
    double cc = d[j - 1];
    double ss = d[j];
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    d[j] = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d[j - 1] = -h;
    } else {
      d[j - 1] = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = 0; k < n; ++k) {
      const double t1 = s.J(k, j - 1);
      const double t2 = s.J(k, j);
      s.J(k, j - 1) = t1 * cc + t2 * ss;
      s.J(k, j) = xny * (t1 + s.J(k, j - 1)) - t2;
    }
  }
  ++s.iq;
  s.R.col(s.iq - 1).head(s.iq) = d.head(s.iq);
  if (std::abs(d[s.iq - 1]) <= kEps * s.r_norm) return false;
  s.r_norm = std::max(s.r_norm, std::abs(d[s.iq - 1]));
  return true;
}

void delete_constraint(ActiveSet& s, int first_inequality_slot, int id) {
  const int n = static_cast<int>(s.J.rows());
  int qq = -1;
  for (int i = first_inequality_slot; i < s.iq; ++i) {
    if (s.A[i] == id) {
      qq = i;
      break;
    }
  }
  if (qq < 0) return;
  for (int i = qq; i < s.iq - 1; ++i) {
    s.A[i] = s.A[i + 1];
    s.u[i] = s.u[i + 1];
    s.R.col(i) = s.R.col(i + 1);
  }
  s.A[s.iq - 1] = s.A[s.iq];
  s.u[s.iq - 1] = s.u[s.iq];
  s.A[s.iq] = 0;
  s.u[s.iq] = 0.0;
  s.R.col(s.iq - 1).setZero();
  --s.iq;
  if (s.iq == 0) return;
  for (int j = qq; j < s.iq; ++j) {
    double cc = s.R(j, j);
    double ss = s.R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    s.R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      s.R(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      s.R(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < s.iq; ++k) {
      const double t1 = s.R(j, k);
      const double t2 = s.R(j + 1, k);
      s.R(j, k) = t1 * cc + t2 * ss;
      s.R(j + 1, k) = xny * (t1 + s.R(j, k)) - t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = s.J(k, j);
      const double t2 = s.J(k, j + 1);
      s.J(k, j) = t1 * cc + t2 * ss;
      s.J(k, j + 1) = xny * (s.J(k, j) + t1) - t2;
    }
  }
}

// d = J^T np, z = J2 d2 (primal step direction), r = R^{-1} d1 (dual step direction)
void step_directions(const ActiveSet& s, const Eigen::VectorXd& np, Eigen::VectorXd& d, Eigen::VectorXd& z,
                     Eigen::VectorXd& r) {
  const int n = static_cast<int>(np.size());
  d.noalias() = s.J.transpose() * np;
  z.noalias() = s.J.rightCols(n - s.iq) * d.tail(n - s.iq);
  r.setZero();
  if (s.iq > 0) {
    r.head(s.iq) = s.R.topLeftCorner(s.iq, s.iq).triangularView<Eigen::Upper>().solve(d.head(s.iq));
  }
}

bool all_finite(const QpProblem& p) {
  return p.H.allFinite() && p.g.allFinite() && p.A.allFinite() && p.b.allFinite() && p.E.allFinite() &&
         p.f.allFinite();
}

}  // namespace

QpResult solve_qp(const QpProblem& problem, const QpOptions& options) {
  QpResult result;
  const int n = problem.variables();
  const int me = static_cast<int>(problem.E.rows());
  const int mi = static_cast<int>(problem.A.rows());
  if (n == 0 || problem.H.cols() != n || problem.g.size() != n || (mi > 0 && problem.A.cols() != n) ||
      problem.b.size() != mi || (me > 0 && problem.E.cols() != n) || problem.f.size() != me ||
      !all_finite(problem)) {
    return result;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(problem.H);
  if (llt.info() != Eigen::Success) return result;

  // Unit-normalize rows; scaling leaves the feasible set unchanged.
  Eigen::VectorXd a_scale = Eigen::VectorXd::Ones(mi);
  Eigen::MatrixXd A(mi, n);
  Eigen::VectorXd b(mi);
  std::vector<bool> trivial(mi, false);
  for (int i = 0; i < mi; ++i) {
    const double nrm = problem.A.row(i).norm();
    if (nrm < 1e-14) {
      if (problem.b[i] < -options.feasibility_tol) {
        result.status = QpStatus::Infeasible;
        return result;
      }
      trivial[i] = true;
      A.row(i).setZero();
      b[i] = 1.0;
      continue;
    }
    a_scale[i] = nrm;
    A.row(i) = problem.A.row(i) / nrm;
    b[i] = problem.b[i] / nrm;
  }
  Eigen::VectorXd e_scale = Eigen::VectorXd::Ones(me);
  Eigen::MatrixXd E(me, n);
  Eigen::VectorXd f(me);
  for (int i = 0; i < me; ++i) {
    const double nrm = problem.E.row(i).norm();
    if (nrm < 1e-14) {
      result.status = QpStatus::InvalidProblem;
      return result;
    }
    e_scale[i] = nrm;
    E.row(i) = problem.E.row(i) / nrm;
    f[i] = problem.f[i] / nrm;
  }

  const int m = me + mi;
  const int max_iter = options.max_iterations > 0 ? options.max_iterations : 10 * (n + m) + 20;

  ActiveSet s;
  // J = L^{-T}
  s.J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  s.R = Eigen::MatrixXd::Zero(n, n);
  s.A.assign(m + 1, 0);
  s.u = Eigen::VectorXd::Zero(m + 1);

  Eigen::VectorXd x = -llt.solve(problem.g);
  Eigen::VectorXd d(n), z(n), r(n), np(n);

  for (int i = 0; i < me; ++i) {
    np = E.row(i).transpose();
    step_directions(s, np, d, z, r);
    double t2 = 0.0;
    const double znp = z.dot(np);
    if (z.squaredNorm() > kEps) t2 = (f[i] - np.dot(x)) / znp;
    x += t2 * z;
    s.u[s.iq] = t2;
    s.u.head(s.iq) -= t2 * r.head(s.iq);
    s.A[s.iq] = -i - 1;
    if (!add_constraint(s, d)) {
      // dependent equality rows; consistent ones are handled by the caller
      result.status = QpStatus::InvalidProblem;
      return result;
    }
  }

  std::vector<int> iai(mi);
  std::vector<bool> iaexcl(mi, true);
  Eigen::VectorXd slack(mi);
  const double tol = options.feasibility_tol;
  int iterations = 0;

  ActiveSet saved;
  Eigen::VectorXd x_saved;

  auto finish = [&](QpStatus status) {
    if (status == QpStatus::Optimal) {
      // rows skipped as numerically dependent must still hold
      for (int i = 0; i < mi; ++i) {
        if (!trivial[i] && b[i] - A.row(i).dot(x) < -1e-9) status = QpStatus::Infeasible;
      }
    }
    result.status = status;
    result.iterations = iterations;
    result.x = x;
    result.ineq_multipliers = Eigen::VectorXd::Zero(mi);
    result.eq_multipliers = Eigen::VectorXd::Zero(me);
    for (int k = 0; k < s.iq; ++k) {
      const int id = s.A[k];
      if (id < 0) {
        const int e = -id - 1;
        result.eq_multipliers[e] = -s.u[k] / e_scale[e];
      } else {
        result.ineq_multipliers[id] = s.u[k] / a_scale[id];
      }
    }
    result.objective = 0.5 * x.dot(problem.H * x) + problem.g.dot(x);
    return result;
  };

  while (true) {
    // Step 1: recompute slacks and look for a violated constraint.
    if (++iterations > max_iter) return finish(QpStatus::IterationLimit);
    for (int i = 0; i < mi; ++i) iai[i] = trivial[i] ? -1 : i;
    for (int k = me; k < s.iq; ++k) iai[s.A[k]] = -1;
    for (int i = 0; i < mi; ++i) {
      iaexcl[i] = true;
      slack[i] = b[i] - A.row(i).dot(x);
    }
    saved = s;
    x_saved = x;

    bool restart = false;
    while (!restart) {
      // Step 2: pick the most violated constraint.
      double worst = -tol;
      int ip = -1;
      for (int i = 0; i < mi; ++i) {
        if (iai[i] != -1 && iaexcl[i] && slack[i] < worst) {
          worst = slack[i];
          ip = i;
        }
      }
      if (ip < 0) return finish(QpStatus::Optimal);

      np = -A.row(ip).transpose();
      s.u[s.iq] = 0.0;
      s.A[s.iq] = ip;

      while (true) {
        if (++iterations > max_iter) return finish(QpStatus::IterationLimit);
        step_directions(s, np, d, z, r);

        int l = -1;
        double t1 = kInf;
        for (int k = me; k < s.iq; ++k) {
          if (r[k] > 0.0 && s.u[k] / r[k] < t1) {
            t1 = s.u[k] / r[k];
            l = s.A[k];
          }
        }
        const double znp = z.dot(np);
        const double t2 = (z.squaredNorm() > kEps && znp > 0.0) ? -slack[ip] / znp : kInf;
        const double t = std::min(t1, t2);

        if (t >= kInf) return finish(QpStatus::Infeasible);

        if (t2 >= kInf) {
          // dual step only
          s.u.head(s.iq) -= t * r.head(s.iq);
          s.u[s.iq] += t;
          iai[l] = l;
          delete_constraint(s, me, l);
          continue;
        }

        x += t * z;
        s.u.head(s.iq) -= t * r.head(s.iq);
        s.u[s.iq] += t;

        if (t == t2) {
          if (!add_constraint(s, d)) {
            // numerically dependent: roll back and skip this row for now
            s = saved;
            x = x_saved;
            for (int i = 0; i < mi; ++i) {
              slack[i] = b[i] - A.row(i).dot(x);
              iai[i] = trivial[i] ? -1 : i;
            }
            for (int k = me; k < s.iq; ++k) iai[s.A[k]] = -1;
            iaexcl[ip] = false;
            break;
          }
          iai[ip] = -1;
          restart = true;
          break;
        }

        // partial step: drop the blocking constraint and retry
        iai[l] = l;
        delete_constraint(s, me, l);
        slack[ip] = b[ip] - A.row(ip).dot(x);
      }
    }
  }
}

double kkt_residual(const QpProblem& problem, const QpResult& result) {
  if (result.x.size() != problem.variables()) return std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad = problem.H * result.x + problem.g;
  double res = 0.0;
  if (problem.A.rows() > 0) {
    grad += problem.A.transpose() * result.ineq_multipliers;
    const Eigen::VectorXd slack = problem.b - problem.A * result.x;
    for (int i = 0; i < slack.size(); ++i) {
      res = std::max(res, -slack[i]);
      res = std::max(res, -result.ineq_multipliers[i]);
      res = std::max(res, std::abs(result.ineq_multipliers[i] * slack[i]));
    }
  }
  if (problem.E.rows() > 0) {
    grad += problem.E.transpose() * result.eq_multipliers;
    res = std::max(res, (problem.E * result.x - problem.f).cwiseAbs().maxCoeff());
  }
  return std::max(res, grad.cwiseAbs().maxCoeff());
}

}  // namespace harvest
