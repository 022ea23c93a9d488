#include "rbmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

namespace rbmc {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// f(x) = G(|x - c|^2): gradient 2 G' (x-c), Hessian 2 G' I + 4 G'' v v^T,
// Laplacian 2 d G' + 4 u G''. Polynomials in u stay smooth through r = 0.
NeumannTestFunction radial_poly(const Point& c, int d,
                                std::function<double(double)> g0,
                                std::function<double(double)> g1,
                                std::function<double(double)> g2,
                                std::string description) {
  NeumannTestFunction f;
  f.description = std::move(description);
  f.value = [c, g0, d](const Point& x) { return g0(dist2(x, c, d)); };
  f.gradient = [c, g1, d](const Point& x) {
    const double u = dist2(x, c, d);
    Point g{};
    for (int i = 0; i < d; ++i) g[i] = 2.0 * g1(u) * (x[i] - c[i]);
    return g;
  };
  f.hessian = [c, g1, g2, d](const Point& x, linalg::Matrix& h) {
    const double u = dist2(x, c, d);
    h = linalg::Matrix(d, d);
    for (int i = 0; i < d; ++i) {
      h.at(i, i) = 2.0 * g1(u);
      for (int j = 0; j < d; ++j) h.at(i, j) += 4.0 * g2(u) * (x[i] - c[i]) * (x[j] - c[j]);
    }
  };
  f.laplacian = [c, g1, g2, d](const Point& x) {
    const double u = dist2(x, c, d);
    return 2.0 * d * g1(u) + 4.0 * u * g2(u);
  };
  return f;
}

// product of per-axis factors given with two derivatives
struct AxisFun {
  std::function<double(double)> v, dv, ddv;
};

NeumannTestFunction product_function(std::vector<AxisFun> axes, int d, std::string description) {
  auto shared = std::make_shared<std::vector<AxisFun>>(std::move(axes));
  NeumannTestFunction f;
  f.description = std::move(description);
  f.value = [shared, d](const Point& x) {
    double p = 1.0;
    for (int i = 0; i < d; ++i) p *= (*shared)[static_cast<std::size_t>(i)].v(x[i]);
    return p;
  };
  f.gradient = [shared, d](const Point& x) {
    Point g{};
    for (int i = 0; i < d; ++i) {
      double p = 1.0;
      for (int j = 0; j < d; ++j) {
        const AxisFun& a = (*shared)[static_cast<std::size_t>(j)];
        p *= j == i ? a.dv(x[j]) : a.v(x[j]);
      }
      g[i] = p;
    }
    return g;
  };
  f.hessian = [shared, d](const Point& x, linalg::Matrix& h) {
    h = linalg::Matrix(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        double p = 1.0;
        for (int k = 0; k < d; ++k) {
          const AxisFun& a = (*shared)[static_cast<std::size_t>(k)];
          if (k == i && k == j)
            p *= a.ddv(x[k]);
          else if (k == i || k == j)
            p *= a.dv(x[k]);
          else
            p *= a.v(x[k]);
        }
        h.at(i, j) = p;
        h.at(j, i) = p;
      }
  };
  f.laplacian = [f](const Point& x) {
    // small d; reuse the Hessian
    linalg::Matrix h;
    f.hessian(x, h);
    return linalg::trace(h);
  };
  return f;
}

double estimate_hessian_bound(const NeumannTestFunction& f, const Point& lo, const Point& hi,
                              int d) {
  RngStream rng(0x9e3779b97f4a7c15ull, "hessian-bound");
  double b = 0.0;
  linalg::Matrix h;
  for (int k = 0; k < 2048; ++k) {
    Point p{};
    for (int i = 0; i < d; ++i) p[i] = lo[i] + (hi[i] - lo[i]) * rng.u01();
    f.hessian(p, h);
    b = std::max(b, linalg::operator_norm(h));
  }
  return 1.5 * b;
}

}  // namespace

std::vector<NeumannTestFunction> test_functions(const Domain& dom, const Point* window_lo,
                                                const Point* window_hi) {
  const int d = dom.dim();
  std::vector<NeumannTestFunction> fs;
  switch (dom.kind()) {
    case DomainKind::ball: {
      const Point c = dom.ball_center();
      const double R2 = dom.ball_radius() * dom.ball_radius();
      fs.push_back(radial_poly(
          c, d, [R2](double u) { return u - u * u / (2.0 * R2); },
          [R2](double u) { return 1.0 - u / R2; }, [R2](double) { return -1.0 / R2; },
          "radial r^2 - r^4/(2R^2)"));
      if (d == 2) {
        // (x^3 - 3xy^2) (5/9 - r^2/(3R^2)): third angular harmonic, zero
        // normal derivative on the circle
        NeumannTestFunction f;
        f.description = "angular (x^3-3xy^2)(5/9 - r^2/(3R^2))";
        const double iR2 = 1.0 / R2;
        auto phi = [iR2](double u) { return 5.0 / 9.0 - u * iR2 / 3.0; };
        const double dphi = -iR2 / 3.0;
        auto harm = [c](const Point& x, double& v, Point& gv, linalg::Matrix& hv) {
          const double a = x[0] - c[0], b = x[1] - c[1];
          v = a * a * a - 3.0 * a * b * b;
          gv = make_point(3.0 * (a * a - b * b), -6.0 * a * b);
          hv = linalg::Matrix(2, 2);
          hv.at(0, 0) = 6.0 * a;
          hv.at(0, 1) = hv.at(1, 0) = -6.0 * b;
          hv.at(1, 1) = -6.0 * a;
        };
        f.value = [c, phi, harm](const Point& x) {
          double v;
          Point gv;
          linalg::Matrix hv;
          harm(x, v, gv, hv);
          return v * phi(dist2(x, c, 2));
        };
        f.gradient = [c, phi, dphi, harm](const Point& x) {
          double v;
          Point gv;
          linalg::Matrix hv;
          harm(x, v, gv, hv);
          const double u = dist2(x, c, 2);
          Point g{};
          for (int i = 0; i < 2; ++i)
            g[i] = phi(u) * gv[i] + v * dphi * 2.0 * (x[i] - c[i]);
          return g;
        };
        f.hessian = [c, phi, dphi, harm](const Point& x, linalg::Matrix& h) {
          double v;
          Point gv;
          linalg::Matrix hv;
          harm(x, v, gv, hv);
          const double u = dist2(x, c, 2);
          h = linalg::Matrix(2, 2);
          const double gp[2] = {2.0 * (x[0] - c[0]) * dphi, 2.0 * (x[1] - c[1]) * dphi};
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              h.at(i, j) = phi(u) * hv.at(i, j) + gv[i] * gp[j] + gp[i] * gv[j] +
                           (i == j ? v * 2.0 * dphi : 0.0);
        };
        f.laplacian = [c, phi, dphi, harm](const Point& x) {
          double v;
          Point gv;
          linalg::Matrix hv;
          harm(x, v, gv, hv);
          // Delta(v phi) = v Delta(phi) + 2 <grad v, grad phi>, v harmonic;
          // <grad v, x-c> = 3v for a cubic harmonic
          return v * 4.0 * dphi + 2.0 * dphi * 2.0 * 3.0 * v;
        };
        fs.push_back(std::move(f));
      } else {
        fs.push_back(radial_poly(
            c, d,
            [R2](double u) { return u - u * u / R2 + u * u * u / (3.0 * R2 * R2); },
            [R2](double u) { const double t = 1.0 - u / R2; return t * t; },
            [R2](double u) { return 2.0 * (u / R2 - 1.0) / R2; },
            "radial r^2 - r^4/R^2 + r^6/(3R^4)"));
      }
      if (d == 2) {
        // (x^2 - y^2) (2/3 - r^2/(3R^2)): angular mode with zero normal
        // derivative on the circle
        NeumannTestFunction f;
        f.description = "angular (x^2-y^2)(2/3 - r^2/(3R^2))";
        const double iR2 = 1.0 / R2;
        auto phi = [iR2](double u) { return 2.0 / 3.0 - u * iR2 / 3.0; };
        f.value = [c, phi](const Point& x) {
          const double a = x[0] - c[0], b = x[1] - c[1];
          return (a * a - b * b) * phi(a * a + b * b);
        };
        f.gradient = [c, phi, iR2](const Point& x) {
          const double a = x[0] - c[0], b = x[1] - c[1];
          const double v = a * a - b * b, u = a * a + b * b;
          const double dphi = -iR2 / 3.0;
          return make_point(phi(u) * 2.0 * a + v * dphi * 2.0 * a,
                            phi(u) * -2.0 * b + v * dphi * 2.0 * b);
        };
        f.hessian = [c, phi, iR2](const Point& x, linalg::Matrix& h) {
          const double a = x[0] - c[0], b = x[1] - c[1];
          const double v = a * a - b * b, u = a * a + b * b;
          const double dphi = -iR2 / 3.0;
          h = linalg::Matrix(2, 2);
          // phi H_v + grad_v x grad_phi + grad_phi x grad_v + v H_phi
          const double gv[2] = {2.0 * a, -2.0 * b};
          const double gp[2] = {2.0 * a * dphi, 2.0 * b * dphi};
          h.at(0, 0) = phi(u) * 2.0 + 2.0 * gv[0] * gp[0] + v * 2.0 * dphi;
          h.at(1, 1) = phi(u) * -2.0 + 2.0 * gv[1] * gp[1] + v * 2.0 * dphi;
          h.at(0, 1) = gv[0] * gp[1] + gp[0] * gv[1];
          h.at(1, 0) = h.at(0, 1);
        };
        f.laplacian = [c, iR2](const Point& x) {
          const double a = x[0] - c[0], b = x[1] - c[1];
          return -4.0 * (a * a - b * b) * iR2;
        };
        fs.push_back(std::move(f));
      } else {
        fs.push_back(radial_poly(
            c, d,
            [R2](double u) { return std::pow(std::sin(0.5 * kPi * u / R2), 2); },
            [R2](double u) { return 0.5 * kPi / R2 * std::sin(kPi * u / R2); },
            [R2](double u) { return 0.5 * kPi * kPi / (R2 * R2) * std::cos(kPi * u / R2); },
            "radial sin^2(pi r^2 / (2R^2))"));
      }
      break;
    }
    case DomainKind::box: {
      const Point lo = dom.box_lo(), hi = dom.box_hi();
      auto cos_axis = [](double a, double L, int k) {
        const double w = k * kPi / L;
        return AxisFun{[a, w](double x) { return std::cos(w * (x - a)); },
                       [a, w](double x) { return -w * std::sin(w * (x - a)); },
                       [a, w](double x) { return -w * w * std::cos(w * (x - a)); }};
      };
      auto one = []() {
        return AxisFun{[](double) { return 1.0; }, [](double) { return 0.0; },
                       [](double) { return 0.0; }};
      };
      for (int variant = 0; variant < 3; ++variant) {
        std::vector<AxisFun> axes;
        std::string desc = "cos product k=(";
        for (int i = 0; i < d; ++i) {
          int k = 0;
          if (variant == 0) k = i == 0 ? 1 : 0;
          if (variant == 1) k = 1;
          if (variant == 2) k = i == 0 ? 2 : 1;
          if (d == 1) k = variant + 1;
          desc += (i ? "," : "") + std::to_string(k);
          axes.push_back(k == 0 ? one() : cos_axis(lo[i], hi[i] - lo[i], k));
        }
        desc += ")";
        fs.push_back(product_function(std::move(axes), d, desc));
      }
      break;
    }
    case DomainKind::whole_space: {
      if (!window_lo || !window_hi)
        throw std::invalid_argument("test_functions: whole-space needs a window");
      const Point lo = *window_lo, hi = *window_hi;
      auto bump = [](double m, double w) {
        // (1 - s^2)^4 inside |s|<1, C^2 at the edge
        auto s_of = [m, w](double x) { return (x - m) / w; };
        return AxisFun{[s_of](double x) {
                         const double s = s_of(x);
                         if (std::abs(s) >= 1.0) return 0.0;
                         const double t = 1.0 - s * s;
                         return t * t * t * t;
                       },
                       [s_of, w](double x) {
                         const double s = s_of(x);
                         if (std::abs(s) >= 1.0) return 0.0;
                         const double t = 1.0 - s * s;
                         return -8.0 * s * t * t * t / w;
                       },
                       [s_of, w](double x) {
                         const double s = s_of(x);
                         if (std::abs(s) >= 1.0) return 0.0;
                         const double t = 1.0 - s * s;
                         return (-8.0 * t * t * t + 48.0 * s * s * t * t) / (w * w);
                       }};
      };
      auto bump_times_s = [](double m, double w) {
        auto s_of = [m, w](double x) { return (x - m) / w; };
        return AxisFun{[s_of](double x) {
                         const double s = s_of(x);
                         if (std::abs(s) >= 1.0) return 0.0;
                         const double t = 1.0 - s * s;
                         return s * t * t * t * t;
                       },
                       [s_of, w](double x) {
                         const double s = s_of(x);
                         if (std::abs(s) >= 1.0) return 0.0;
                         const double t = 1.0 - s * s;
                         return (t * t * t * t - 8.0 * s * s * t * t * t) / w;
                       },
                       [s_of, w](double x) {
                         const double s = s_of(x);
                         if (std::abs(s) >= 1.0) return 0.0;
                         const double t = 1.0 - s * s;
                         return (-8.0 * s * t * t * t - 16.0 * s * t * t * t +
                                 48.0 * s * s * s * t * t) /
                                (w * w);
                       }};
      };
      for (int variant = 0; variant < 3; ++variant) {
        std::vector<AxisFun> axes;
        for (int i = 0; i < d; ++i) {
          const double m = 0.5 * (lo[i] + hi[i]);
          const double w = 0.5 * (hi[i] - lo[i]);
          if (variant == 1 && i == 0)
            axes.push_back(bump_times_s(m, w));
          else if (variant == 2)
            axes.push_back(bump(m, 0.75 * w));
          else
            axes.push_back(bump(m, w));
        }
        fs.push_back(product_function(std::move(axes), d,
                                      variant == 0   ? "bump product"
                                      : variant == 1 ? "odd bump product"
                                                     : "narrow bump product"));
      }
      break;
    }
    case DomainKind::radial:
      throw std::invalid_argument("test_functions: radial domains are not supported");
  }

  Point lo{}, hi{};
  if (dom.bounded()) {
    dom.bounding_box(lo, hi);
  } else {
    lo = *window_lo;
    hi = *window_hi;
  }
  for (auto& f : fs) f.hessian_norm_bound = estimate_hessian_bound(f, lo, hi, d);
  return fs;
}

double max_normal_derivative(const Domain& dom, const NeumannTestFunction& f, int grid) {
  const int d = dom.dim();
  double worst = 0.0;
  auto check = [&](const BoundaryPoint& bp) {
    const Point g = f.gradient(bp.location);
    worst = std::max(worst, std::abs(dot(g, bp.inward_normal, d)));
  };
  switch (dom.kind()) {
    case DomainKind::whole_space:
      return 0.0;
    case DomainKind::ball: {
      RngStream rng(0x51ed270b, "boundary-grid");
      for (int k = 0; k < grid; ++k) {
        Point u{};
        double n2 = 0.0;
        for (int i = 0; i < d; ++i) {
          u[i] = rng.normal();
          n2 += u[i] * u[i];
        }
        const double n = std::sqrt(n2);
        BoundaryPoint bp;
        bp.location = add(dom.ball_center(), scale(u, dom.ball_radius() / n));
        bp.inward_normal = scale(u, -1.0 / n);
        check(bp);
      }
      return worst;
    }
    case DomainKind::box: {
      RngStream rng(0x51ed270b, "boundary-grid");
      const Point lo = dom.box_lo(), hi = dom.box_hi();
      for (int k = 0; k < grid; ++k) {
        const int axis = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(d)));
        const int side = static_cast<int>(rng.uniform_int(2));
        BoundaryPoint bp;
        for (int i = 0; i < d; ++i) bp.location[i] = lo[i] + (hi[i] - lo[i]) * rng.u01();
        bp.location[axis] = side ? hi[axis] : lo[axis];
        bp.inward_normal = Point{};
        bp.inward_normal[axis] = side ? -1.0 : 1.0;
        check(bp);
      }
      return worst;
    }
    case DomainKind::radial: {
      for (int k = 0; k < grid; ++k) check(dom.radial_boundary_at(2.0 * kPi * k / grid));
      return worst;
    }
  }
  return worst;
}

ConsistencyReport consistency_error(const GeneratorTable& gen, const Partition& part,
                                    const NeumannTestFunction& f) {
  const int d = part.dim();
  std::vector<double> pif(part.size());
  for (std::size_t k = 0; k < part.size(); ++k) pif[k] = f.value(part.cells[k].centroid);

  ConsistencyReport rep;
  linalg::Matrix h;
  for (std::size_t k = 0; k < part.size(); ++k) {
    const CellGenerator& g = gen.cells[k];
    if (!g.valid()) {
      ++rep.n_skipped_invalid;
      continue;
    }
    if (!part.margin_ok(static_cast<int>(k))) {
      ++rep.n_skipped_margin;
      continue;
    }
    const double lpf = gen.apply(pif, static_cast<int>(k));
    const double target = 0.5 * f.laplacian(part.cells[k].centroid);
    const double e = std::abs(lpf - target);
    rep.cell_ids.push_back(static_cast<int>(k));
    rep.error.push_back(e);
    ++rep.n_evaluated;
    const bool boundary = part.cells[k].is_boundary;
    rep.sup_all = std::max(rep.sup_all, e);
    (boundary ? rep.sup_boundary : rep.sup_interior) =
        std::max(boundary ? rep.sup_boundary : rep.sup_interior, e);

    // bound shape: sample the Hessian over the rho-ball around the anchor
    const double rho = part.rho[k];
    const double eps = part.epsilon(static_cast<int>(k));
    RngStream hs(0x68e5u, substream("hess-osc", k));
    linalg::Matrix h0;
    f.hessian(g.anchor, h0);
    double sup_h = linalg::operator_norm(h0);
    double osc = 0.0;
    for (int s = 0; s < 32; ++s) {
      Point p{};
      do {
        for (int i = 0; i < d; ++i) p[i] = 2.0 * hs.u01() - 1.0;
      } while (norm2(p, d) > 1.0);
      Point y = g.anchor;
      for (int i = 0; i < d; ++i) y[i] += rho * p[i];
      f.hessian(y, h);
      sup_h = std::max(sup_h, linalg::operator_norm(h));
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) h.at(i, j) -= h0.at(i, j);
      osc = std::max(osc, linalg::operator_norm(h));
    }
    if (!g.rank_full) continue;
    double term;
    if (boundary) {
      const double delta = part.delta[k];
      term = (std::max(eps, delta) / rho + std::pow(rho, part.domain.holder_alpha())) * sup_h + osc;
    } else {
      term = eps / rho * sup_h + osc;
    }
    if (term > 0.0) {
      double& fitted = boundary ? rep.fitted_const_boundary : rep.fitted_const_interior;
      fitted = std::max(fitted, e / term);
    }
  }
  return rep;
}

HalfBallCheck halfball_moment_check(int d, double r, std::uint64_t samples, RngStream& rng) {
  if (samples < 10000) throw std::invalid_argument("halfball_moment_check: samples >= 1e4");
  HalfBallCheck out;
  out.second_moment = linalg::Matrix(d, d);
  out.second_sigma = linalg::Matrix(d, d);
  out.second_expected = linalg::Matrix(d, d);
  Point sum1{}, sum1sq{};
  linalg::Matrix sum2(d, d), sum2sq(d, d);
  std::uint64_t got = 0;
  while (got < samples) {
    Point y{};
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) {
      y[i] = (2.0 * rng.u01() - 1.0) * r;
      n2 += y[i] * y[i];
    }
    if (n2 > r * r || y[d - 1] <= 0.0) continue;
    ++got;
    for (int i = 0; i < d; ++i) {
      const double v = y[i] / r;
      sum1[i] += v;
      sum1sq[i] += v * v;
      for (int j = 0; j < d; ++j) {
        sum2.at(i, j) += y[i] * y[j];
        sum2sq.at(i, j) += y[i] * y[j] * y[i] * y[j];
      }
    }
  }
  const double n = static_cast<double>(samples);
  for (int i = 0; i < d; ++i) {
    out.first_moment[i] = sum1[i] / n;
    const double var = std::max(0.0, sum1sq[i] / n - out.first_moment[i] * out.first_moment[i]);
    out.first_sigma[i] = std::sqrt(var / n);
  }
  out.first_expected[d - 1] = beta_d(d);
  for (int i = 0; i < d; ++i) {
    const double z = std::abs(out.first_moment[i] - out.first_expected[i]) /
                     std::max(out.first_sigma[i], 1e-300);
    out.max_first_z = std::max(out.max_first_z, z);
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const double m = sum2.at(i, j) / n;
      out.second_moment.at(i, j) = m;
      const double var = std::max(0.0, sum2sq.at(i, j) / n - m * m);
      out.second_sigma.at(i, j) = std::sqrt(var / n);
      out.second_expected.at(i, j) = i == j ? r * r / (d + 2) : 0.0;
      const double z = std::abs(m - out.second_expected.at(i, j)) /
                       std::max(out.second_sigma.at(i, j), 1e-300);
      out.max_second_z = std::max(out.max_second_z, z);
    }
  return out;
}

SymdiffCheck boundary_symdiff_check(const Domain& dom, const Point& x, double r,
                                    std::uint64_t samples, RngStream& rng) {
  const int d = dom.dim();
  const BoundaryPoint bp = dom.nearest_boundary_point(x);
  std::uint64_t hits = 0;
  for (std::uint64_t k = 0; k < samples; ++k) {
    // uniform in B(x, r)
    Point y{};
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) {
      y[i] = rng.normal();
      n2 += y[i] * y[i];
    }
    const double rad = r * std::pow(rng.u01_open(), 1.0 / d);
    const double f = rad / std::sqrt(n2);
    for (int i = 0; i < d; ++i) y[i] = x[i] + y[i] * f;
    const bool in_d = dom.contains(y);
    const bool in_half = dot(sub(y, x), bp.inward_normal, d) > 0.0;
    if (in_d != in_half) ++hits;
  }
  const double ball = unit_ball_volume(d) * std::pow(r, d);
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  SymdiffCheck out;
  out.measure = p * ball;
  out.sigma = ball * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  out.ratio = out.measure / std::pow(r, d + dom.holder_alpha());
  return out;
}

TwoSampleResult two_sample_distance(const std::vector<Point>& a, const std::vector<Point>& b,
                                    int d) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("two_sample_distance: empty sample");
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("two_sample_distance: bad dimension");
  const std::size_t n = a.size(), m = b.size();
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) ab += dist(a[i], b[j], d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) aa += 2.0 * dist(a[i], a[j], d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) bb += 2.0 * dist(b[i], b[j], d);
  TwoSampleResult out;
  out.energy = 2.0 * ab / (double(n) * double(m)) - aa / (double(n) * double(n)) -
               bb / (double(m) * double(m));
  if (d == 1) {
    std::vector<double> xs(n), ys(m);
    for (std::size_t i = 0; i < n; ++i) xs[i] = a[i][0];
    for (std::size_t j = 0; j < m; ++j) ys[j] = b[j][0];
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double ks = 0.0;
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
      if (xs[i] <= ys[j])
        ++i;
      else
        ++j;
      ks = std::max(ks, std::abs(double(i) / n - double(j) / m));
    }
    out.ks = ks;
  }
  return out;
}

PermutationTest energy_permutation_test(const std::vector<Point>& a, const std::vector<Point>& b,
                                        int d, int permutations, RngStream& rng) {
  const std::size_t n = a.size(), m = b.size(), total = n + m;
  if (n == 0 || m == 0) throw std::invalid_argument("energy_permutation_test: empty sample");
  std::vector<Point> pool;
  pool.reserve(total);
  pool.insert(pool.end(), a.begin(), a.end());
  pool.insert(pool.end(), b.begin(), b.end());

  // pooled pairwise distances, float to keep the matrix cache-friendly
  std::vector<float> dm(total * total, 0.0f);
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = i + 1; j < total; ++j) {
      const float v = static_cast<float>(dist(pool[i], pool[j], d));
      dm[i * total + j] = v;
      dm[j * total + i] = v;
    }

  std::vector<std::uint8_t> label(total, 0);
  for (std::size_t i = n; i < total; ++i) label[i] = 1;
  auto energy_of = [&](const std::vector<std::uint8_t>& lab) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      const float* row = dm.data() + i * total;
      const bool ia = lab[i] == 0;
      for (std::size_t j = i + 1; j < total; ++j) {
        const double v = row[j];
        if (ia == (lab[j] == 0))
          (ia ? aa : bb) += 2.0 * v;
        else
          ab += v;
      }
    }
    return 2.0 * ab / (double(n) * double(m)) - aa / (double(n) * double(n)) -
           bb / (double(m) * double(m));
  };

  PermutationTest out;
  out.statistic = energy_of(label);
  std::vector<double> null_stats(static_cast<std::size_t>(permutations));
  std::vector<std::uint8_t> lab = label;
  int ge = 0;
  for (int p = 0; p < permutations; ++p) {
    for (std::size_t i = total - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i + 1));
      std::swap(lab[i], lab[j]);
    }
    const double e = energy_of(lab);
    null_stats[static_cast<std::size_t>(p)] = e;
    if (e >= out.statistic) ++ge;
  }
  out.p_value = (1.0 + ge) / (permutations + 1.0);
  std::sort(null_stats.begin(), null_stats.end());
  const std::size_t q = static_cast<std::size_t>(std::floor(0.95 * (permutations - 1)));
  out.null_q95 = null_stats[q];
  out.rejects_at_5pct = out.p_value < 0.05;
  return out;
}

void tilde_moments(const Partition& part, const CellGenerator& g, linalg::Matrix& second,
                   double& qt, double& sigma_qt) {
  const int d = part.dim();
  const Point a = g.anchor;
  second = linalg::Matrix(d, d);
  double mass = 0.0;
  Point first{};
  double wsum_s = 0.0, wsum_s2 = 0.0, w_mc = 0.0;
  std::uint64_t n_mc = 0;
  for (int j : g.neighbors) {
    const Cell& c = part.cells[static_cast<std::size_t>(j)];
    part.accumulate_cell_moments(j, a, mass, first, second);
    if (!c.exact_box) {
      const auto pts = part.cell_points(j);
      const auto w = part.cell_point_weights(j);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double s = dist2(pts[i], a, d) / d;
        wsum_s += w[i] * s;
        wsum_s2 += w[i] * s * s;
        w_mc += w[i];
      }
      n_mc += pts.size();
    }
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) second.at(i, j) /= mass;
  qt = linalg::trace(second) / d;
  if (n_mc > 0 && w_mc > 0.0) {
    const double mean = wsum_s / w_mc;
    const double var = std::max(0.0, wsum_s2 / w_mc - mean * mean);
    // only the MC share of the mass fluctuates
    sigma_qt = (w_mc / mass) * std::sqrt(var / static_cast<double>(n_mc));
  } else {
    sigma_qt = 0.0;
  }
}

TrackerReport bound_trackers(const std::vector<LevelInput>& levels) {
  TrackerReport rep;
  for (const LevelInput& lv : levels) {
    const Partition& part = *lv.part;
    const GeneratorTable& gen = *lv.gen;
    const int d = part.dim();
    TrackerLevel t;
    t.n = part.level_params.n;
    t.qmin_ratio = std::numeric_limits<double>::infinity();
    linalg::Matrix qt_mat;
    for (std::size_t k = 0; k < part.size(); ++k) {
      const CellGenerator& g = gen.cells[k];
      if (!g.valid()) continue;
      if (!part.margin_ok(static_cast<int>(k))) continue;
      const double rho = part.rho[k];
      const double eps = part.epsilon(static_cast<int>(k));
      if (!(eps > 0.0)) continue;
      double qt = 0.0, sq = 0.0;
      tilde_moments(part, g, qt_mat, qt, sq);
      const double denom = (eps + 2.0 * rho) * eps;
      t.qtilde_ratio = std::max(t.qtilde_ratio, std::abs(g.q - qt) / denom);
      t.qtilde_ratio_slack =
          std::max(t.qtilde_ratio_slack, (std::abs(g.q - qt) - 3.0 * sq) / denom);
      t.qmin_ratio =
          std::min(t.qmin_ratio, linalg::min_quadratic_form(g.second_moment) / (rho * rho));
      if (!part.cells[k].is_boundary && g.rank_full) {
        t.qrho_ratio =
            std::max(t.qrho_ratio, std::abs(g.q - rho * rho / (d + 2)) / (eps * rho));
        linalg::Matrix m = qt_mat;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            m.at(i, j) /= g.q;
            if (i == j) m.at(i, j) -= 1.0;
          }
        t.qq_ratio = std::max(t.qq_ratio, linalg::operator_norm(m) / (eps / rho));
      }
    }
    if (t.qtilde_ratio_slack > 1.0) rep.cellwise_qtilde_ok = false;
    rep.levels.push_back(t);
  }
  if (rep.levels.size() >= 2) {
    const TrackerLevel& first = rep.levels.front();
    for (const TrackerLevel& t : rep.levels) {
      if (t.qrho_ratio > 2.0 * first.qrho_ratio && first.qrho_ratio > 0.0) rep.growth_ok = false;
      if (t.qq_ratio > 2.0 * first.qq_ratio && first.qq_ratio > 0.0) rep.growth_ok = false;
      if (t.qtilde_ratio > 2.0 * std::max(first.qtilde_ratio, 1e-12)) rep.growth_ok = false;
    }
  }
  return rep;
}

HausdorffCheck hausdorff_check(const Partition& part, int pairs, RngStream& rng) {
  HausdorffCheck out;
  out.pairs = pairs;
  const int d = part.dim();
  for (int k = 0; k < pairs; ++k) {
    const int cell = static_cast<int>(rng.uniform_int(part.size()));
    Point z{};
    if (part.domain.bounded()) {
      z = part.domain.sample_uniform(1, rng)[0];
    } else {
      for (int i = 0; i < d; ++i)
        z[i] = part.window_lo[i] + (part.window_hi[i] - part.window_lo[i]) * rng.u01();
    }
    double dh = 0.0;
    for (const Point& p : part.cell_points(cell)) dh = std::max(dh, dist(p, z, d));
    const double center = dist(part.cells[static_cast<std::size_t>(cell)].centroid, z, d);
    const double excess = std::abs(dh - center) - part.epsilon(cell);
    out.max_excess = std::max(out.max_excess, excess);
    if (excess > 0.0) ++out.violations;
  }
  return out;
}

}  // namespace rbmc
