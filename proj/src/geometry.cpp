#include "rexhmc/geometry.hpp"

#include <cmath>

namespace rexhmc {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

void attach_fd_hessians(ConstraintModel& model, double step) {
  auto jac = model.jacobian;
  const int n = model.ambient_dim;
  const int m = model.codim;
  model.hessians = [jac, n, m, step](const Vector& q) {
    std::vector<Matrix> hs(m, Matrix::Zero(n, n));
    for (int j = 0; j < n; ++j) {
      Vector qp = q, qm = q;
      const double h = step * std::max(1.0, std::abs(q[j]));
      qp[j] += h;
      qm[j] -= h;
      const Matrix jp = jac(qp);
      const Matrix jm = jac(qm);
      for (int i = 0; i < m; ++i) hs[i].col(j) = (jp.col(i) - jm.col(i)) / (2.0 * h);
    }
    // Symmetrize: FD columns of d(grad xi_i)/dq_j differ from the transpose
    // by truncation error only.
    for (int i = 0; i < m; ++i) hs[i] = 0.5 * (hs[i] + hs[i].transpose()).eval();
    return hs;
  };
  model.analytic_hessians = false;
}

GramMatrix gram(const ConstraintModel& model, const Vector& q) {
  const Matrix jac = model.jacobian(q);
  GramMatrix g;
  g.value = jac.transpose() * jac;
  Eigen::LLT<Matrix> llt(g.value);
  if (llt.info() != Eigen::Success) {
    throw SingularGramError("gram: J^T J not positive definite (rank-deficient constraint gradient)");
  }
  g.log_det = 0.0;
  const Matrix& l = llt.matrixLLT();
  for (int i = 0; i < g.value.rows(); ++i) {
    if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) {
      throw SingularGramError("gram: nonpositive Cholesky pivot");
    }
    g.log_det += 2.0 * std::log(l(i, i));
  }
  return g;
}

Matrix tangent_basis(const ConstraintModel& model, const Vector& q) {
  const int n = model.ambient_dim;
  const int m = model.codim;
  const Matrix jac = model.jacobian(q);

  Eigen::ColPivHouseholderQR<Matrix> qr(jac);
  const Matrix r = qr.matrixR();
  const double scale = std::abs(r(0, 0));
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw SingularGramError("tangent_basis: constraint gradient is zero");
  }
  for (int i = 0; i < m; ++i) {
    if (std::abs(r(i, i)) < 1e-12 * scale) {
      throw SingularGramError("tangent_basis: constraint gradient rank-deficient");
    }
  }

  Matrix full_q = qr.householderQ() * Matrix::Identity(n, n);
  Matrix basis = full_q.rightCols(n - m);

  // Fix the sign so the basis is a deterministic function of q.
  for (int j = 0; j < basis.cols(); ++j) {
    for (int i = 0; i < n; ++i) {
      if (std::abs(basis(i, j)) > 1e-12) {
        if (basis(i, j) < 0.0) basis.col(j) *= -1.0;
        break;
      }
    }
  }
  return basis;
}

ProjectionResult project_to_manifold(const ConstraintModel& model, const Vector& x,
                                     const SolverConfig& cfg) {
  const int n = model.ambient_dim;
  const int m = model.codim;

  ProjectionResult result;
  if (!all_finite(x)) return result;

  Vector q = x;
  Vector v = Vector::Zero(m);

  auto residual_of = [&](const Vector& qq, const Vector& vv) -> Vector {
    Vector f(n + m);
    f.head(n) = qq + model.jacobian(qq) * vv - x;
    f.tail(m) = model.residual(qq);
    return f;
  };

  Vector f = residual_of(q, v);
  double fnorm = f.lpNorm<Eigen::Infinity>();

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (fnorm <= cfg.constraint_tol) break;

    const Matrix jac = model.jacobian(q);
    const std::vector<Matrix> hess = model.hessians(q);
    Matrix sys = Matrix::Zero(n + m, n + m);
    Matrix top_left = Matrix::Identity(n, n);
    for (int i = 0; i < m; ++i) top_left += v[i] * hess[i];
    sys.topLeftCorner(n, n) = top_left;
    sys.topRightCorner(n, m) = jac;
    sys.bottomLeftCorner(m, n) = jac.transpose();

    const Vector step = sys.partialPivLu().solve(-f);
    if (!all_finite(step)) return result;  // singular system, e.g. zero gradient

    // Halve the step until the residual norm decreases.
    double t = 1.0;
    bool improved = false;
    for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
      const Vector q_try = q + t * step.head(n);
      const Vector v_try = v + t * step.tail(m);
      const Vector f_try = residual_of(q_try, v_try);
      const double fnorm_try = f_try.lpNorm<Eigen::Infinity>();
      if (std::isfinite(fnorm_try) && fnorm_try < fnorm) {
        q = q_try;
        v = v_try;
        f = f_try;
        fnorm = fnorm_try;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) return result;
  }

  if (!(fnorm <= cfg.constraint_tol)) return result;
  if (v.norm() > cfg.normal_cap) {
    result.status = ProjectionStatus::normal_cap_exceeded;
    return result;
  }
  const Vector rebuilt = q + model.jacobian(q) * v;
  if ((rebuilt - x).norm() > cfg.reconstruction_tol) return result;

  result.status = ProjectionStatus::ok;
  result.decomposition = TubularDecomposition{q, v, x};
  return result;
}

Vector reconstruct(const ConstraintModel& model, const Vector& q, const Vector& v) {
  return q + model.jacobian(q) * v;
}

}  // namespace rexhmc
