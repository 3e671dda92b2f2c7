#include "rexhmc/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rexhmc {

namespace {

constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Conic helpers (circle / single ellipse / ellipse suite factors)

struct Conic {
  double cx, cy, a2, b2;  // center and squared semi-axes

  double value(const Vector& q) const {
    const double dx = q[0] - cx;
    const double dy = q[1] - cy;
    return dx * dx / a2 + dy * dy / b2 - 1.0;
  }
  Vector grad(const Vector& q) const {
    Vector g(2);
    g[0] = 2.0 * (q[0] - cx) / a2;
    g[1] = 2.0 * (q[1] - cy) / b2;
    return g;
  }
  Matrix hess() const {
    Matrix h = Matrix::Zero(2, 2);
    h(0, 0) = 2.0 / a2;
    h(1, 1) = 2.0 / b2;
    return h;
  }
};

ModelBundle make_conic_bundle(const std::string& name, const Conic& c) {
  ModelBundle bundle;
  bundle.name = name;
  bundle.constraint.ambient_dim = 2;
  bundle.constraint.codim = 1;
  bundle.constraint.residual = [c](const Vector& q) {
    Vector r(1);
    r[0] = c.value(q);
    return r;
  };
  bundle.constraint.jacobian = [c](const Vector& q) -> Matrix { return c.grad(q); };
  bundle.constraint.hessians = [c](const Vector&) { return std::vector<Matrix>{c.hess()}; };
  bundle.potential = zero_potential(2);
  bundle.component_label = [](const Vector&) { return 0; };
  bundle.n_components = 1;
  bundle.reference_point = (Vector(2) << std::sqrt(c.a2) + c.cx, c.cy).finished();
  return bundle;
}

// ---------------------------------------------------------------------------
// Ellipse suite: normalized product constraint

struct EllipseSuite {
  std::vector<Conic> conics;

  int count() const { return static_cast<int>(conics.size()); }

  // Value, gradient and Hessian of xi = P / sqrt(W) with P the product of
  // the factors and W the sum of squared leave-one-out partial products.
  void evaluate(const Vector& q, double* value, Vector* grad, Matrix* hess) const {
    const int k = count();
    std::vector<double> f(k);
    std::vector<Vector> df(k);
    for (int i = 0; i < k; ++i) {
      f[i] = conics[i].value(q);
      df[i] = conics[i].grad(q);
    }

    auto partial = [&](int skip1, int skip2 = -1, int skip3 = -1) {
      double acc = 1.0;
      for (int j = 0; j < k; ++j) {
        if (j == skip1 || j == skip2 || j == skip3) continue;
        acc *= f[j];
      }
      return acc;
    };

    double product = 1.0;
    for (int i = 0; i < k; ++i) product *= f[i];

    Vector grad_p = Vector::Zero(2);
    for (int i = 0; i < k; ++i) grad_p += partial(i) * df[i];

    double w = 0.0;
    std::vector<Vector> grad_partials(k, Vector::Zero(2));
    for (int i = 0; i < k; ++i) {
      const double pi = partial(i);
      w += pi * pi;
      for (int l = 0; l < k; ++l) {
        if (l == i) continue;
        grad_partials[i] += partial(i, l) * df[l];
      }
    }
    Vector grad_w = Vector::Zero(2);
    for (int i = 0; i < k; ++i) grad_w += 2.0 * partial(i) * grad_partials[i];

    const double w_half = std::sqrt(w);
    if (value) *value = product / w_half;
    if (!grad && !hess) return;

    const Vector grad_xi = grad_p / w_half - 0.5 * product / (w * w_half) * grad_w;
    if (grad) *grad = grad_xi;
    if (!hess) return;

    Matrix hess_p = Matrix::Zero(2, 2);
    for (int i = 0; i < k; ++i) {
      hess_p += partial(i) * conics[i].hess();
      for (int l = 0; l < k; ++l) {
        if (l == i) continue;
        hess_p += partial(i, l) * (df[i] * df[l].transpose());
      }
    }

    Matrix hess_w = Matrix::Zero(2, 2);
    for (int i = 0; i < k; ++i) {
      Matrix hess_partial = Matrix::Zero(2, 2);
      for (int l = 0; l < k; ++l) {
        if (l == i) continue;
        hess_partial += partial(i, l) * conics[l].hess();
        for (int j = 0; j < k; ++j) {
          if (j == i || j == l) continue;
          hess_partial += partial(i, l, j) * (df[l] * df[j].transpose());
        }
      }
      hess_w += 2.0 * (grad_partials[i] * grad_partials[i].transpose() + partial(i) * hess_partial);
    }

    const double w32 = w * w_half;
    const double w52 = w * w32;
    *hess = hess_p / w_half -
            0.5 / w32 * (grad_p * grad_w.transpose() + grad_w * grad_p.transpose()) -
            0.5 * product / w32 * hess_w +
            0.75 * product / w52 * (grad_w * grad_w.transpose());
  }

  int nearest(const Vector& q) const {
    int best = 0;
    double best_abs = std::abs(conics[0].value(q));
    for (int i = 1; i < count(); ++i) {
      const double v = std::abs(conics[i].value(q));
      if (v < best_abs) {
        best_abs = v;
        best = i;
      }
    }
    return best;
  }
};

// ---------------------------------------------------------------------------
// SIR identifiable map

struct SirMap {
  Vector theta_star;
  double delta;
  Vector scales;
  Vector target;        // regularized map at theta_star
  Vector target_scale;  // componentwise normalization

  // Regularized identifiable combinations in natural units.
  Vector map(const Vector& th) const {
    const double b1 = th[0], b2 = th[1], g1 = th[2], g2 = th[3], rho = th[4];
    const double d2 = delta * delta;
    const double u = b1 - b2;
    Vector out(4);
    out[0] = g1 + g2;
    out[1] = g1 * g2;
    out[2] = (b1 + b2) * rho / (rho * rho + d2);
    out[3] = rho * (g1 - g2) * u / (u * u + d2);
    return out;
  }

  // Gradients and Hessians of the map components w.r.t. natural theta.
  void derivatives(const Vector& th, Matrix* jac, std::vector<Matrix>* hess) const {
    const double b1 = th[0], b2 = th[1], g1 = th[2], g2 = th[3], rho = th[4];
    const double d2 = delta * delta;

    const double rden = rho * rho + d2;
    const double g = rho / rden;
    const double gp = (d2 - rho * rho) / (rden * rden);
    const double gpp = 2.0 * rho * (rho * rho - 3.0 * d2) / (rden * rden * rden);

    const double u = b1 - b2;
    const double uden = u * u + d2;
    const double h = u / uden;
    const double hp = (d2 - u * u) / (uden * uden);
    const double hpp = 2.0 * u * (u * u - 3.0 * d2) / (uden * uden * uden);

    const double bsum = b1 + b2;
    const double gdiff = g1 - g2;

    *jac = Matrix::Zero(5, 4);
    (*jac)(2, 0) = 1.0;
    (*jac)(3, 0) = 1.0;
    (*jac)(2, 1) = g2;
    (*jac)(3, 1) = g1;
    (*jac)(0, 2) = g;
    (*jac)(1, 2) = g;
    (*jac)(4, 2) = bsum * gp;
    (*jac)(0, 3) = rho * gdiff * hp;
    (*jac)(1, 3) = -rho * gdiff * hp;
    (*jac)(2, 3) = rho * h;
    (*jac)(3, 3) = -rho * h;
    (*jac)(4, 3) = gdiff * h;

    hess->assign(4, Matrix::Zero(5, 5));
    (*hess)[1](2, 3) = 1.0;
    (*hess)[1](3, 2) = 1.0;

    (*hess)[2](0, 4) = gp;
    (*hess)[2](4, 0) = gp;
    (*hess)[2](1, 4) = gp;
    (*hess)[2](4, 1) = gp;
    (*hess)[2](4, 4) = bsum * gpp;

    Matrix& h4 = (*hess)[3];
    h4(0, 0) = rho * gdiff * hpp;
    h4(1, 1) = rho * gdiff * hpp;
    h4(0, 1) = -rho * gdiff * hpp;
    h4(1, 0) = -rho * gdiff * hpp;
    h4(0, 2) = rho * hp;
    h4(2, 0) = rho * hp;
    h4(0, 3) = -rho * hp;
    h4(3, 0) = -rho * hp;
    h4(1, 2) = -rho * hp;
    h4(2, 1) = -rho * hp;
    h4(1, 3) = rho * hp;
    h4(3, 1) = rho * hp;
    h4(0, 4) = gdiff * hp;
    h4(4, 0) = gdiff * hp;
    h4(1, 4) = -gdiff * hp;
    h4(4, 1) = -gdiff * hp;
    h4(2, 4) = h;
    h4(4, 2) = h;
    h4(3, 4) = -h;
    h4(4, 3) = -h;
  }
};

}  // namespace

ModelBundle make_circle() {
  return make_conic_bundle("circle", Conic{0.0, 0.0, 1.0, 1.0});
}

ModelBundle make_ellipse(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConstructionError("make_ellipse: semi-axes must be positive");
  return make_conic_bundle("ellipse", Conic{0.0, 0.0, a * a, b * b});
}

ModelBundle build_ellipse_suite(const EllipseSuiteParams& params) {
  const int k = static_cast<int>(params.centers.size());
  if (k < 2 || params.a.size() != params.centers.size() ||
      params.b.size() != params.centers.size()) {
    throw ConstructionError("build_ellipse_suite: need matching centers and semi-axes");
  }

  EllipseSuite suite;
  for (int i = 0; i < k; ++i) {
    if (!(params.a[i] > 0.0) || !(params.b[i] > 0.0)) {
      throw ConstructionError("build_ellipse_suite: semi-axes must be positive");
    }
    suite.conics.push_back(Conic{params.centers[i][0], params.centers[i][1],
                                 params.a[i] * params.a[i], params.b[i] * params.b[i]});
  }

  // Disjointness: on each ellipse boundary every other factor stays away
  // from zero.
  const int probe = 256;
  for (int i = 0; i < k; ++i) {
    for (int s = 0; s < probe; ++s) {
      const double t = 2.0 * kPi * s / probe;
      Vector q(2);
      q[0] = params.centers[i][0] + params.a[i] * std::cos(t);
      q[1] = params.centers[i][1] + params.b[i] * std::sin(t);
      for (int j = 0; j < k; ++j) {
        if (j == i) continue;
        if (std::abs(suite.conics[j].value(q)) < 0.05) {
          throw ConstructionError("build_ellipse_suite: ellipses overlap or nearly touch");
        }
      }
    }
  }

  ModelBundle bundle;
  bundle.name = "ellipses";
  bundle.constraint.ambient_dim = 2;
  bundle.constraint.codim = 1;
  bundle.constraint.residual = [suite](const Vector& q) {
    double value;
    suite.evaluate(q, &value, nullptr, nullptr);
    Vector r(1);
    r[0] = value;
    return r;
  };
  bundle.constraint.jacobian = [suite](const Vector& q) -> Matrix {
    Vector g(2);
    suite.evaluate(q, nullptr, &g, nullptr);
    return g;
  };
  bundle.constraint.hessians = [suite](const Vector& q) {
    Matrix h(2, 2);
    suite.evaluate(q, nullptr, nullptr, &h);
    return std::vector<Matrix>{h};
  };
  bundle.potential = zero_potential(2);
  bundle.component_label = [suite](const Vector& q) { return suite.nearest(q); };
  bundle.n_components = k;
  bundle.reference_point =
      (Vector(2) << params.centers[0][0] + params.a[0], params.centers[0][1]).finished();
  return bundle;
}

ModelBundle build_sir(const SirParams& params) {
  for (int i = 0; i < 5; ++i) {
    if (!(params.box_lo[i] < params.box_hi[i]) || !std::isfinite(params.box_lo[i]) ||
        !std::isfinite(params.box_hi[i])) {
      throw ConstructionError("build_sir: invalid box");
    }
    if (!(params.scales[i] > 0.0)) throw ConstructionError("build_sir: scales must be positive");
  }
  if (!(params.delta > 0.0)) throw ConstructionError("build_sir: delta must be positive");

  SirMap sir;
  sir.theta_star = params.theta_star;
  sir.delta = params.delta;
  sir.scales = params.scales;
  sir.target = sir.map(params.theta_star);
  sir.target_scale = Vector(4);
  for (int i = 0; i < 4; ++i) {
    sir.target_scale[i] = std::max(std::abs(sir.target[i]), 1e-12);
  }

  ModelBundle bundle;
  bundle.name = "sir";
  bundle.constraint.ambient_dim = 5;
  bundle.constraint.codim = 4;
  bundle.constraint.residual = [sir](const Vector& u) {
    const Vector th = sir.scales.cwiseProduct(u);
    Vector r = sir.map(th) - sir.target;
    return r.cwiseQuotient(sir.target_scale).eval();
  };
  bundle.constraint.jacobian = [sir](const Vector& u) {
    const Vector th = sir.scales.cwiseProduct(u);
    Matrix jac;
    std::vector<Matrix> hess;
    sir.derivatives(th, &jac, &hess);
    Matrix out(5, 4);
    for (int i = 0; i < 4; ++i) {
      out.col(i) = sir.scales.cwiseProduct(jac.col(i)) / sir.target_scale[i];
    }
    return out;
  };
  bundle.constraint.hessians = [sir](const Vector& u) {
    const Vector th = sir.scales.cwiseProduct(u);
    Matrix jac;
    std::vector<Matrix> hess;
    sir.derivatives(th, &jac, &hess);
    const Matrix scale_outer = sir.scales * sir.scales.transpose();
    std::vector<Matrix> out(4);
    for (int i = 0; i < 4; ++i) {
      out[i] = hess[i].cwiseProduct(scale_outer) / sir.target_scale[i];
    }
    return out;
  };

  const Vector lo = params.box_lo.cwiseQuotient(params.scales);
  const Vector hi = params.box_hi.cwiseQuotient(params.scales);
  bundle.potential.value = [lo, hi](const Vector& u) {
    for (int i = 0; i < u.size(); ++i) {
      if (u[i] < lo[i] || u[i] > hi[i]) return std::numeric_limits<double>::infinity();
    }
    return 0.0;
  };
  bundle.potential.gradient = [](const Vector& u) { return Vector::Zero(u.size()).eval(); };
  bundle.potential.in_domain = [lo, hi](const Vector& u) {
    for (int i = 0; i < u.size(); ++i) {
      if (u[i] < lo[i] || u[i] > hi[i]) return false;
    }
    return true;
  };

  bundle.component_label = [](const Vector& u) { return u[2] >= u[3] ? 0 : 1; };
  bundle.n_components = 2;
  bundle.reference_point = params.theta_star.cwiseQuotient(params.scales);
  bundle.output_scales = params.scales;
  // The smallest Gram eigenvalue along the level set is O(1e-2), so normal
  // coordinates of points in a thin tube reach O(10).
  bundle.normal_cap = 40.0;
  return bundle;
}

ModelBundle build_tetrahedron(const TetrahedronParams& params) {
  if (params.chiral_strength < 0.0) {
    throw ConstructionError("build_tetrahedron: chiral strength must be nonnegative");
  }
  const double lambda = params.chiral_strength;

  ModelBundle bundle;
  bundle.name = "tetrahedron";
  bundle.constraint.ambient_dim = 9;
  bundle.constraint.codim = 6;

  auto block = [](const Vector& q, int i) { return q.segment<3>(3 * i); };

  bundle.constraint.residual = [block](const Vector& q) {
    const auto q2 = block(q, 0), q3 = block(q, 1), q4 = block(q, 2);
    Vector r(6);
    r[0] = q2.squaredNorm() - 1.0;
    r[1] = q3.squaredNorm() - 1.0;
    r[2] = q4.squaredNorm() - 1.0;
    r[3] = q2.dot(q3) + 1.0 / 3.0;
    r[4] = q2.dot(q4) + 1.0 / 3.0;
    r[5] = q3.dot(q4) + 1.0 / 3.0;
    return r;
  };
  bundle.constraint.jacobian = [block](const Vector& q) {
    const auto q2 = block(q, 0), q3 = block(q, 1), q4 = block(q, 2);
    Matrix jac = Matrix::Zero(9, 6);
    jac.col(0).segment<3>(0) = 2.0 * q2;
    jac.col(1).segment<3>(3) = 2.0 * q3;
    jac.col(2).segment<3>(6) = 2.0 * q4;
    jac.col(3).segment<3>(0) = q3;
    jac.col(3).segment<3>(3) = q2;
    jac.col(4).segment<3>(0) = q4;
    jac.col(4).segment<3>(6) = q2;
    jac.col(5).segment<3>(3) = q4;
    jac.col(5).segment<3>(6) = q3;
    return jac;
  };
  bundle.constraint.hessians = [](const Vector&) {
    // Quadratic constraints: constant Hessians.
    std::vector<Matrix> hs(6, Matrix::Zero(9, 9));
    const Matrix eye = Matrix::Identity(3, 3);
    hs[0].block<3, 3>(0, 0) = 2.0 * eye;
    hs[1].block<3, 3>(3, 3) = 2.0 * eye;
    hs[2].block<3, 3>(6, 6) = 2.0 * eye;
    hs[3].block<3, 3>(0, 3) = eye;
    hs[3].block<3, 3>(3, 0) = eye;
    hs[4].block<3, 3>(0, 6) = eye;
    hs[4].block<3, 3>(6, 0) = eye;
    hs[5].block<3, 3>(3, 6) = eye;
    hs[5].block<3, 3>(6, 3) = eye;
    return hs;
  };

  auto signed_volume = [block](const Vector& q) {
    const Eigen::Vector3d q2 = block(q, 0), q3 = block(q, 1), q4 = block(q, 2);
    return q2.dot(q3.cross(q4));
  };
  bundle.potential.value = [lambda, signed_volume](const Vector& q) {
    return lambda * signed_volume(q);
  };
  bundle.potential.gradient = [lambda, block](const Vector& q) {
    const Eigen::Vector3d q2 = block(q, 0), q3 = block(q, 1), q4 = block(q, 2);
    Vector g(9);
    g.segment<3>(0) = lambda * q3.cross(q4);
    g.segment<3>(3) = lambda * q4.cross(q2);
    g.segment<3>(6) = lambda * q2.cross(q3);
    return g;
  };

  bundle.component_label = [signed_volume](const Vector& q) {
    return signed_volume(q) >= 0.0 ? 0 : 1;
  };
  bundle.n_components = 2;

  Vector ref(9);
  ref << 1.0, 0.0, 0.0,                                              // q2
      -1.0 / 3.0, 2.0 * std::sqrt(2.0) / 3.0, 0.0,                   // q3
      -1.0 / 3.0, -std::sqrt(2.0) / 3.0, std::sqrt(6.0) / 3.0;       // q4
  bundle.reference_point = ref;
  return bundle;
}

ModelBundle build_benchmark(const std::string& name) {
  if (name == "circle") return make_circle();
  if (name == "ellipses") return build_ellipse_suite();
  if (name == "sir") return build_sir();
  if (name == "tetrahedron") return build_tetrahedron();
  throw ConstructionError("build_benchmark: unknown benchmark '" + name + "'");
}

double ellipse_perimeter(double a, double b) {
  // Composite Simpson on the periodic speed; converges far beyond need.
  const int n = 1 << 14;
  const double h = 2.0 * kPi / n;
  auto speed = [&](double t) {
    const double s = std::sin(t), c = std::cos(t);
    return std::sqrt(a * a * s * s + b * b * c * c);
  };
  double acc = speed(0.0) + speed(2.0 * kPi);
  for (int i = 1; i < n; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * speed(i * h);
  return acc * h / 3.0;
}

ReferenceQuantities reference_quantities(const std::string& benchmark) {
  ReferenceQuantities ref;
  ref.benchmark = benchmark;
  if (benchmark == "tetrahedron") {
    const double ratio = std::exp(-std::sqrt(2.0));
    ref.component_ratio = ratio;
    ref.component_occupancy = {ratio / (1.0 + ratio), 1.0 / (1.0 + ratio)};
    ref.method = "closed form: component ratio exp(-sqrt(2)) from the chiral potential";
  } else if (benchmark == "ellipses") {
    const EllipseSuiteParams params;
    std::vector<double> perims;
    double total = 0.0;
    for (size_t i = 0; i < params.a.size(); ++i) {
      perims.push_back(ellipse_perimeter(params.a[i], params.b[i]));
      total += perims.back();
    }
    for (double p : perims) ref.component_occupancy.push_back(p / total);
    ref.method = "arc lengths by composite Simpson quadrature of the perimeter integrals";
  } else if (benchmark == "sir") {
    ref.component_occupancy = {0.5, 0.5};
    ref.component_ratio = 1.0;
    ref.method = "strain-exchange symmetry of the identifiable map";
  } else {
    throw ConstructionError("reference_quantities: unknown benchmark '" + benchmark + "'");
  }
  return ref;
}

std::function<double(double)> ellipse_q1_reference_cdf(const EllipseSuiteParams& params,
                                                       int grid) {
  // Accumulate arc length into a fine q1 histogram, then integrate.
  double q1_min = std::numeric_limits<double>::infinity();
  double q1_max = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < params.centers.size(); ++i) {
    q1_min = std::min(q1_min, params.centers[i][0] - params.a[i]);
    q1_max = std::max(q1_max, params.centers[i][0] + params.a[i]);
  }
  const int cells = 1 << 12;
  const double pad = 1e-9 * (q1_max - q1_min);
  const double lo = q1_min - pad;
  const double width = (q1_max - q1_min + 2.0 * pad) / cells;

  std::vector<double> mass(cells, 0.0);
  double total = 0.0;
  for (size_t i = 0; i < params.centers.size(); ++i) {
    const double a = params.a[i], b = params.b[i];
    for (int s = 0; s < grid; ++s) {
      const double t = 2.0 * kPi * (s + 0.5) / grid;
      const double w = std::sqrt(a * a * std::sin(t) * std::sin(t) +
                                 b * b * std::cos(t) * std::cos(t));
      const double q1 = params.centers[i][0] + a * std::cos(t);
      int cell = static_cast<int>((q1 - lo) / width);
      cell = std::clamp(cell, 0, cells - 1);
      mass[cell] += w;
      total += w;
    }
  }
  std::vector<double> cdf(cells + 1, 0.0);
  for (int c = 0; c < cells; ++c) cdf[c + 1] = cdf[c] + mass[c] / total;

  return [lo, width, cdf, cells](double x) {
    const double pos = (x - lo) / width;
    if (pos <= 0.0) return 0.0;
    if (pos >= cells) return 1.0;
    const int cell = static_cast<int>(pos);
    const double frac = pos - cell;
    return cdf[cell] + frac * (cdf[cell + 1] - cdf[cell]);
  };
}

}  // namespace rexhmc
