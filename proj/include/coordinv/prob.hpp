#pragma once
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "coordinv/rng.hpp"

namespace coordinv {

inline double vec_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline double vec_dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vec_dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("l1_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
  return s;
}

inline double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  return 0.5 * l1_distance(a, b);
}

inline bool is_distribution(const std::vector<double>& v, double tol = 1e-9) {
  double s = 0.0;
  for (double x : v) {
    if (x < -tol || !std::isfinite(x)) return false;
    s += x;
  }
  return std::fabs(s - 1.0) <= tol;
}

// Clamps negative round-off to zero and rescales to sum exactly 1.
// Zero (or negative beyond round-off) total mass is a logic error upstream.
inline void normalize_in_place(std::vector<double>& v) {
  double s = 0.0;
  for (double& x : v) {
    if (x < 0.0) {
      if (x < -1e-9) throw std::runtime_error("normalize_in_place: negative mass");
      x = 0.0;
    }
    s += x;
  }
  if (!(s > 0.0)) throw std::runtime_error("normalize_in_place: zero total mass");
  for (double& x : v) x /= s;
}

// Inverse-CDF draw from an (unnormalized tolerated) pmf over 0..n-1.
inline int sample_index(const std::vector<double>& pmf, RngStream& rng) {
  double total = vec_sum(pmf);
  double u = rng.uniform01() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    acc += pmf[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(pmf.size()) - 1;  // u landed on accumulated round-off
}

}  // namespace coordinv
