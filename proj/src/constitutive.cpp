// SPDX-License-Identifier: Apache-2.0

#include "curlforge/constitutive.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace curlforge {

DerivedBConstants derive_B_constants(double c1, double c2, double g1, double g2, double mu,
                                     double M2) {
  if (!(c1 > 0 && c2 > 0 && mu > 0 && M2 > 0))
    throw ParameterError("derive_B_constants: c1, c2, mu, M2 must be positive");
  DerivedBConstants d;
  d.c3 = c1 / (2.0 * c2 * c2);
  d.c4 = 1.0 / c1;
  d.g3 = g1 + d.c3 * g2 * g2;
  d.g4 = std::sqrt(2.0 * std::abs(g1) / c1);
  d.lam0 = mu / (M2 * M2);
  return d;
}

Vec3 invert_H(const MaterialLaw& law, const Vec3& x, const Vec3& w, double tol, int cap) {
  if (law.B_analytic) return law.B_analytic(x, w);
  Vec3 z = w;  // monotone laws: w is a serviceable start
  double target = tol * (1.0 + w.norm());
  Vec3 r = law.H(x, z) - w;
  for (int it = 0; it < cap; ++it) {
    if (r.norm() <= target) return z;
    Mat3 J = law.dH(x, z);
    Vec3 step = J.fullPivLu().solve(r);
    double t = 1.0;
    for (int ls = 0; ls < 40; ++ls) {
      Vec3 zn = z - t * step;
      Vec3 rn = law.H(x, zn) - w;
      if (rn.norm() < r.norm()) {
        z = zn;
        r = rn;
        break;
      }
      t *= 0.5;
      if (ls == 39) throw InversionError("law inversion stalled, residual " + std::to_string(r.norm()));
    }
  }
  if (r.norm() <= target) return z;
  throw InversionError("law inversion did not reach tolerance, residual " +
                       std::to_string(r.norm()));
}

Vec3 MaterialLaw::B(const Vec3& x, const Vec3& w) const {
  return invert_H(*this, x, w, newton_tol, newton_cap);
}

Mat3 MaterialLaw::dB(const Vec3& x, const Vec3& w) const {
  Vec3 z = B(x, w);
  return dH(x, z).inverse();
}

namespace {

MaterialLaw isotropic_law(const std::string& name, std::function<double(double)> a,
                          std::function<double(double)> da, LawConstants constants) {
  // H(x,z) = a(|z|^2) z, dH = a I + 2 a' z z^T
  MaterialLaw law;
  law.name = name;
  law.constants = constants;
  law.H = [a](const Vec3&, const Vec3& z) { return Vec3(a(z.squaredNorm()) * z); };
  law.dH = [a, da](const Vec3&, const Vec3& z) {
    double s = z.squaredNorm();
    return Mat3(a(s) * Mat3::Identity() + 2.0 * da(s) * z * z.transpose());
  };
  // radial inversion: solve r a(r^2) = |w| for r >= 0 by Newton
  law.B_analytic = [a, da](const Vec3&, const Vec3& w) -> Vec3 {
    double wn = w.norm();
    if (wn == 0) return Vec3::Zero();
    double r = wn / a(0.0);
    for (int it = 0; it < 80; ++it) {
      double s = r * r;
      double g = r * a(s) - wn;
      if (std::abs(g) < 1e-15 * (1 + wn)) break;
      double dg = a(s) + 2 * s * da(s);
      r -= g / dg;
      if (r < 0) r = 0;
    }
    return Vec3((r / wn) * w);
  };
  return law;
}

}  // namespace

MaterialLaw make_material_law(const std::string& name,
                              const std::map<std::string, double>& params) {
  auto get = [&](const std::string& k, double dflt) {
    auto it = params.find(k);
    return it == params.end() ? dflt : it->second;
  };
  if (name == "identity") {
    MaterialLaw law;
    law.name = name;
    law.constants = {1, 1, 1, 0, 1, 0, 0};
    law.H = [](const Vec3&, const Vec3& z) { return z; };
    law.dH = [](const Vec3&, const Vec3&) { return Mat3(Mat3::Identity()); };
    law.B_analytic = [](const Vec3&, const Vec3& w) { return w; };
    return law;
  }
  if (name == "scaled") {
    double nu = get("nu", 2.0);
    if (nu <= 0) throw ParameterError("scaled law needs nu > 0");
    MaterialLaw law;
    law.name = name;
    law.constants = {nu, nu, nu, 0, nu, 0, 0};
    law.H = [nu](const Vec3&, const Vec3& z) { return Vec3(nu * z); };
    law.dH = [nu](const Vec3&, const Vec3&) { return Mat3(nu * Mat3::Identity()); };
    law.B_analytic = [nu](const Vec3&, const Vec3& w) { return Vec3(w / nu); };
    return law;
  }
  if (name == "spd_linear") {
    // fixed anisotropic SPD matrix
    Mat3 A;
    A << 2.0, 0.5, 0.0, 0.5, 1.5, 0.0, 0.0, 0.0, 1.0;
    Mat3 Ainv = A.inverse();
    Eigen::SelfAdjointEigenSolver<Mat3> es(A);
    MaterialLaw law;
    law.name = name;
    law.constants.c1 = es.eigenvalues().minCoeff();
    law.constants.mu = es.eigenvalues().minCoeff();
    law.constants.c2 = es.eigenvalues().maxCoeff();
    law.constants.M2 = es.eigenvalues().maxCoeff();
    law.H = [A](const Vec3&, const Vec3& z) { return Vec3(A * z); };
    law.dH = [A](const Vec3&, const Vec3&) { return A; };
    law.B_analytic = [Ainv](const Vec3&, const Vec3& w) { return Vec3(Ainv * w); };
    return law;
  }
  if (name == "saturating") {
    // a(s) = lam + kappa/(1+s): lam <= a <= lam+kappa
    double lam = get("lam", 1.0), kappa = get("kappa", 1.0);
    if (lam <= 0 || kappa < 0) throw ParameterError("saturating law needs lam > 0, kappa >= 0");
    LawConstants c;
    c.c1 = lam;
    c.c2 = lam + kappa;
    c.g1 = 0;
    c.g2 = 0;
    // radial eigenvalue a + 2 s a' = lam + kappa (1-s)/(1+s)^2, minimal at s = 3
    c.mu = std::min(lam, lam + kappa * (1.0 - 3.0) / 16.0);
    c.M2 = lam + kappa;
    c.M1 = 0;
    return isotropic_law(
        name, [lam, kappa](double s) { return lam + kappa / (1.0 + s); },
        [kappa](double s) { return -kappa / ((1.0 + s) * (1.0 + s)); }, c);
  }
  if (name == "convex_potential") {
    // H = grad P for P(z) = |z|^2 + log cosh |z|, so a(s) = 2 + tanh(sqrt s)/sqrt s
    LawConstants c;
    c.c1 = 2;
    c.c2 = 3;
    c.mu = 2;   // radial derivative 2 + sech^2 r >= 2
    c.M2 = 3;
    auto a = [](double s) {
      double r = std::sqrt(s);
      return r < 1e-8 ? 3.0 - s / 3.0 : 2.0 + std::tanh(r) / r;
    };
    auto da = [](double s) {
      double r = std::sqrt(s);
      if (r < 1e-8) return -1.0 / 3.0;
      double sech2 = 1.0 / std::cosh(r) / std::cosh(r);
      // d/ds [tanh r / r] with r = sqrt(s)
      return (sech2 * r - std::tanh(r)) / (2.0 * s * r);
    };
    return isotropic_law(name, a, da, c);
  }
  throw ParameterError("unknown material law '" + name + "'");
}

CurrentLaw make_current_law(const std::string& name,
                            const std::map<std::string, double>& params) {
  auto get = [&](const std::string& k, double dflt) {
    auto it = params.find(k);
    return it == params.end() ? dflt : it->second;
  };
  CurrentLaw cl;
  cl.name = name;
  if (name == "zero") {
    cl.K0 = 0;
    cl.K2 = 0;
    cl.sublinear = true;
    cl.f = [](const Vec3&, const Vec3&) { return Vec3(Vec3::Zero()); };
    return cl;
  }
  if (name == "linear") {
    double k0 = get("K0", 1.0);
    cl.K0 = std::abs(k0);
    cl.K2 = std::abs(k0);
    cl.sublinear = false;
    cl.f = [k0](const Vec3&, const Vec3& z) { return Vec3(k0 * z); };
    return cl;
  }
  if (name == "sublinear") {
    // f = alpha z / (1 + |z|)
    double alpha = get("alpha", 0.5);
    cl.K0 = std::abs(alpha);
    cl.K2 = std::abs(alpha);
    cl.sublinear = true;
    cl.f = [alpha](const Vec3&, const Vec3& z) { return Vec3(alpha * z / (1.0 + z.norm())); };
    return cl;
  }
  if (name == "constant") {
    Vec3 c(get("cx", 0.0), get("cy", 0.0), get("cz", 0.0));
    cl.K0 = 0;
    cl.f0_bound = c.norm();
    cl.K2 = 0;
    cl.sublinear = true;
    cl.f = [c](const Vec3&, const Vec3&) { return c; };
    return cl;
  }
  throw ParameterError("unknown current law '" + name + "'");
}

std::vector<std::string> builtin_law_names() {
  return {"identity", "scaled", "spd_linear", "saturating", "convex_potential"};
}
std::vector<std::string> builtin_current_names() { return {"zero", "linear", "sublinear", "constant"}; }

namespace {

std::string point_str(const Vec3& z) {
  std::ostringstream os;
  os << "z=(" << z.x() << "," << z.y() << "," << z.z() << ")";
  return os.str();
}

struct Sampler {
  std::mt19937_64 rng;
  std::normal_distribution<double> gauss{0.0, 1.0};
  std::uniform_real_distribution<double> unif{0.0, 1.0};
  double radius;
  explicit Sampler(const SampleSpec& s) : rng(s.seed), radius(s.radius) {}
  Vec3 point() {
    Vec3 d(gauss(rng), gauss(rng), gauss(rng));
    double n = d.norm();
    if (n == 0) return Vec3::Zero();
    return d / n * radius * std::cbrt(unif(rng));
  }
};

ConditionEntry entry(const std::string& id) {
  ConditionEntry e;
  e.id = id;
  e.margin = std::numeric_limits<double>::max();
  return e;
}

void track_min(ConditionEntry& e, double margin, const Vec3& z) {
  if (margin < e.margin) {
    e.margin = margin;
    e.witness = point_str(z);
  }
}

}  // namespace

ConditionReport check_conditions(const MaterialLaw& law, const SampleSpec& spec) {
  ConditionReport rep;
  Sampler smp(spec);
  const LawConstants& c = law.constants;
  DerivedBConstants d = law.derived();

  ConditionEntry H1 = entry("H1"), H2a = entry("H2_ellipticity"), H2b = entry("H2_bound"),
                 H4 = entry("H4"), H3 = entry("H3_inverse"), B1 = entry("B1"),
                 mono = entry("mono_B"), jac = entry("jacobian_fd"), h3t = entry("H3T"),
                 h3n = entry("H3N");

  for (int i = 0; i < spec.count; ++i) {
    Vec3 x = smp.point(), z = smp.point(), z2 = smp.point();
    Vec3 Hz = law.H(x, z);
    track_min(H1, Hz.dot(z) - (c.c1 * z.squaredNorm() - c.g1), z);
    track_min(H1, (c.c2 * z.norm() + c.g2) - Hz.norm(), z);
    Mat3 J = law.dH(x, z);
    Eigen::SelfAdjointEigenSolver<Mat3> es(Mat3(0.5 * (J + J.transpose())));
    track_min(H2a, es.eigenvalues().minCoeff() - c.mu, z);
    track_min(H2b, c.M2 - J.operatorNorm() + 1e-12, z);
    Vec3 dz = z2 - z;
    track_min(H4, (law.H(x, z2) - Hz).dot(dz) - c.mu * dz.squaredNorm(), z);

    // inverse round trip
    Vec3 back = law.B(x, Hz);
    track_min(H3, 1e-9 * (1 + z.norm()) - (back - z).norm(), z);

    Vec3 w = smp.point(), w2 = smp.point();
    Vec3 Bw = law.B(x, w), Bw2 = law.B(x, w2);
    track_min(B1, Bw.dot(w) - (d.c3 * w.squaredNorm() - d.g3), w);
    track_min(B1, (d.c4 * w.norm() + d.g4) - Bw.norm(), w);
    Vec3 dw = w2 - w;
    track_min(mono, (Bw2 - Bw).dot(dw) - d.lam0 * dw.squaredNorm(), w);

    // finite-difference Jacobian check (relative)
    double h = 1e-6 * (1.0 + z.norm());
    double worst = 0;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e(k) = h;
      Vec3 col = (law.H(x, z + e) - law.H(x, z - e)) / (2 * h);
      worst = std::max(worst, (col - J.col(k)).norm());
    }
    track_min(jac, 1e-6 * (1.0 + J.operatorNorm()) - worst, z);

    // boundary-compatibility conditions, sampled with a random unit normal
    Vec3 nu = smp.point();
    if (nu.norm() < 1e-12) nu = Vec3(0, 0, 1);
    nu.normalize();
    auto tang = [&](const Vec3& v) { return Vec3(v - v.dot(nu) * nu); };
    {
      Vec3 y = smp.point();
      Vec3 zT = tang(law.B(x, y));
      Vec3 lhs = tang(law.H(x, zT));
      double err = (lhs - tang(y)).norm() / (1.0 + y.norm());
      track_min(h3t, 1e-9 - err, y);
    }
    {
      // nu.z = nu.B(w) must imply nu.w = nu.H(z); test with z := B(w) + tangential shift
      Vec3 wv = smp.point();
      Vec3 zv = law.B(x, wv) + tang(smp.point());
      double err = std::abs(nu.dot(wv) - nu.dot(law.H(x, zv))) / (1.0 + wv.norm());
      track_min(h3n, 1e-9 - err, wv);
    }
  }
  for (auto* e : {&H1, &H2a, &H2b, &H4, &H3, &B1, &mono, &jac, &h3t, &h3n}) {
    e->pass = e->margin >= 0;
    rep.entries.push_back(*e);
  }
  return rep;
}

ConditionReport check_conditions(const CurrentLaw& law, const SampleSpec& spec) {
  ConditionReport rep;
  Sampler smp(spec);
  ConditionEntry f1 = entry("f1"), f0 = entry("f0_sublinear");
  double far_ratio = 0;
  for (int i = 0; i < spec.count; ++i) {
    Vec3 x = smp.point(), z = smp.point();
    Vec3 fz = law.f(x, z);
    double m = (law.K0 * z.norm() + law.f0_bound) - fz.norm();
    track_min(f1, m, z);
    // sublinearity surrogate: ratio at a large radius must be small
    Vec3 big = z.norm() > 0 ? Vec3(z / z.norm() * 1e4) : Vec3(1e4, 0, 0);
    far_ratio = std::max(far_ratio, law.f(x, big).norm() / big.norm());
  }
  f0.margin = 1e-3 - far_ratio;
  f0.pass = f0.margin >= 0;
  f1.pass = f1.margin >= -1e-12;
  rep.entries.push_back(f1);
  rep.entries.push_back(f0);
  return rep;
}

LawConstants measure_constants(const MaterialLaw& law, const SampleSpec& spec) {
  Sampler smp(spec);
  LawConstants m;
  m.c1 = std::numeric_limits<double>::max();
  m.c2 = 0;
  m.mu = std::numeric_limits<double>::max();
  m.M2 = 0;
  for (int i = 0; i < spec.count; ++i) {
    Vec3 x = smp.point(), z = smp.point();
    double zn2 = z.squaredNorm();
    Vec3 Hz = law.H(x, z);
    if (zn2 > 1e-12) {
      m.c1 = std::min(m.c1, Hz.dot(z) / zn2);
      m.c2 = std::max(m.c2, Hz.norm() / std::sqrt(zn2));
    }
    Mat3 J = law.dH(x, z);
    Eigen::SelfAdjointEigenSolver<Mat3> es(Mat3(0.5 * (J + J.transpose())));
    m.mu = std::min(m.mu, es.eigenvalues().minCoeff());
    m.M2 = std::max(m.M2, J.operatorNorm());
  }
  return m;
}

QuadMat apply_H(const FemSpaces& sp, const MaterialLaw& law, const QuadMat& z) {
  QuadMat out(z.rows(), 3);
  for (int r = 0; r < z.rows(); ++r)
    out.row(r) = law.H(Vec3(sp.quad_x.row(r)), Vec3(z.row(r))).transpose();
  return out;
}

QuadMat apply_B(const FemSpaces& sp, const MaterialLaw& law, const QuadMat& w) {
  QuadMat out(w.rows(), 3);
  for (int r = 0; r < w.rows(); ++r)
    out.row(r) = law.B(Vec3(sp.quad_x.row(r)), Vec3(w.row(r))).transpose();
  return out;
}

QuadMat apply_current(const FemSpaces& sp, const CurrentLaw& law, const QuadMat& z) {
  QuadMat out(z.rows(), 3);
  for (int r = 0; r < z.rows(); ++r)
    out.row(r) = law.f(Vec3(sp.quad_x.row(r)), Vec3(z.row(r))).transpose();
  return out;
}

std::vector<Mat3> jacobian_dH(const FemSpaces& sp, const MaterialLaw& law, const QuadMat& z) {
  std::vector<Mat3> out(z.rows());
  for (int r = 0; r < z.rows(); ++r) out[r] = law.dH(Vec3(sp.quad_x.row(r)), Vec3(z.row(r)));
  return out;
}

std::vector<Mat3> jacobian_dB(const FemSpaces& sp, const MaterialLaw& law, const QuadMat& w) {
  std::vector<Mat3> out(w.rows());
  for (int r = 0; r < w.rows(); ++r) out[r] = law.dB(Vec3(sp.quad_x.row(r)), Vec3(w.row(r)));
  return out;
}

}  // namespace curlforge
