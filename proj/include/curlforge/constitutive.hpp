// SPDX-License-Identifier: Apache-2.0

#ifndef CURLFORGE_CONSTITUTIVE_HPP
#define CURLFORGE_CONSTITUTIVE_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curlforge/fem.hpp"

namespace curlforge {

struct InversionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structural constants of H(x,z):
//   <H,z> >= c1|z|^2 - g1,  |H| <= c2|z| + g2         (coercivity / growth)
//   <dH xi,xi> >= mu|xi|^2, |dH| <= M2, |d_x H| <= M1(|z|+1)
struct LawConstants {
  double c1 = 1, c2 = 1, mu = 1, M1 = 0, M2 = 1;
  double g1 = 0, g2 = 0;  // constant bounds for the offset functions
};

// Constants of the inverse map B transferred from H
struct DerivedBConstants {
  double c3 = 0, c4 = 0, g3 = 0, g4 = 0, lam0 = 0;
};
DerivedBConstants derive_B_constants(double c1, double c2, double g1, double g2, double mu,
                                     double M2);

class MaterialLaw {
 public:
  std::string name;
  LawConstants constants;
  std::function<Vec3(const Vec3& x, const Vec3& z)> H;
  std::function<Mat3(const Vec3& x, const Vec3& z)> dH;
  std::function<Vec3(const Vec3& x, const Vec3& w)> B_analytic;  // optional

  double newton_tol = 1e-12;
  int newton_cap = 50;

  Vec3 B(const Vec3& x, const Vec3& w) const;  // invert_H
  Mat3 dB(const Vec3& x, const Vec3& w) const;
  DerivedBConstants derived() const {
    return derive_B_constants(constants.c1, constants.c2, constants.g1, constants.g2, constants.mu,
                              constants.M2);
  }
};

Vec3 invert_H(const MaterialLaw& law, const Vec3& x, const Vec3& w, double tol, int cap = 50);

struct CurrentLaw {
  std::string name;
  double K0 = 0;       // |f| <= K0|z| + f0
  double f0_bound = 0;
  double K2 = 0;       // |d_z f| <= K2
  bool sublinear = false;
  std::function<Vec3(const Vec3& x, const Vec3& z)> f;
};

// registries
MaterialLaw make_material_law(const std::string& name,
                              const std::map<std::string, double>& params = {});
CurrentLaw make_current_law(const std::string& name,
                            const std::map<std::string, double>& params = {});
std::vector<std::string> builtin_law_names();
std::vector<std::string> builtin_current_names();

// sampled condition checks
struct SampleSpec {
  int count = 2000;
  double radius = 10.0;
  unsigned long seed = 20240915;
};

struct ConditionEntry {
  std::string id;
  bool pass = false;
  double margin = 0;          // worst-case margin (>= 0 means pass)
  std::string witness;        // sample where the margin is attained
};
struct ConditionReport {
  std::vector<ConditionEntry> entries;
  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return true;
  }
  const ConditionEntry* find(const std::string& id) const {
    for (const auto& e : entries)
      if (e.id == id) return &e;
    return nullptr;
  }
};

ConditionReport check_conditions(const MaterialLaw& law, const SampleSpec& spec = {});
ConditionReport check_conditions(const CurrentLaw& law, const SampleSpec& spec = {});

// sampled estimates of (c1,c2,mu,M2) for a law whose declared constants are unknown
LawConstants measure_constants(const MaterialLaw& law, const SampleSpec& spec = {});

// quadrature-field application
QuadMat apply_H(const FemSpaces& sp, const MaterialLaw& law, const QuadMat& z);
QuadMat apply_B(const FemSpaces& sp, const MaterialLaw& law, const QuadMat& w);
QuadMat apply_current(const FemSpaces& sp, const CurrentLaw& law, const QuadMat& z);
std::vector<Mat3> jacobian_dH(const FemSpaces& sp, const MaterialLaw& law, const QuadMat& z);
std::vector<Mat3> jacobian_dB(const FemSpaces& sp, const MaterialLaw& law, const QuadMat& w);

}  // namespace curlforge

#endif
