#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "boltzwall/common.hpp"

namespace boltzwall {

/// Uniform lattice h_v Z^2 masked to the ball B(0, V_max).
///
/// Values live in a compact array indexed by ball node. Collision operators
/// scatter them into a zero-padded square array of half-width P so that
/// post-collisional points (|v'| <= sqrt(2) V_max) can be read without checks.
class VelocityGrid {
 public:
  VelocityGrid(double v_max, double h_v);

  double v_max() const { return v_max_; }
  double h() const { return h_; }
  int half_width() const { return n_; }     // N = round(V_max / h_v)
  int pad_half_width() const { return p_; }  // P
  int stride() const { return 2 * p_ + 1; }
  std::size_t padded_size() const { return static_cast<std::size_t>(stride()) * stride(); }

  std::size_t size() const { return vel_.size(); }
  Vec2 velocity(std::size_t k) const { return vel_[k]; }
  double weight(std::size_t k) const { return w_[k]; }
  int lattice_i(std::size_t k) const { return li_[k]; }
  int lattice_j(std::size_t k) const { return lj_[k]; }
  int padded_index(std::size_t k) const { return pidx_[k]; }
  int padded_index(int i, int j) const { return (i + p_) + stride() * (j + p_); }
  /// Compact index of lattice node (i, j), or -1 outside the ball.
  int node(int i, int j) const;
  /// Compact index of -v for node k.
  int mirror(std::size_t k) const { return mirror_[k]; }
  double total_weight() const;

  /// Writes compact values into a zeroed padded array.
  void scatter(std::span<const double> compact, std::span<double> padded) const;
  /// Bilinear interpolation of a padded array; zero beyond the padded square.
  double interpolate_padded(std::span<const double> padded, Vec2 v) const;

  std::vector<double> sample(const std::function<double(Vec2)>& f) const;

 private:
  double v_max_;
  double h_;
  int n_;
  int p_;
  std::vector<Vec2> vel_;
  std::vector<double> w_;
  std::vector<int> li_, lj_, pidx_, mirror_;
  std::vector<int> lookup_;  // (2N+1)^2 -> compact or -1
};

/// Uniform rule on S^1 with an even number of nodes.
struct SphereQuadrature {
  explicit SphereQuadrature(int n_sigma);
  int n;
  std::vector<double> phi;
  std::vector<double> weight;
};

/// Function of velocity sampled on a grid, with multilinear interpolation
/// of the zero-extended lattice function.
class VelocityFunction {
 public:
  VelocityFunction(std::shared_ptr<const VelocityGrid> grid, std::vector<double> values);
  static VelocityFunction sample(std::shared_ptr<const VelocityGrid> grid,
                                 const std::function<double(Vec2)>& f);

  const VelocityGrid& grid() const { return *grid_; }
  std::shared_ptr<const VelocityGrid> grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  double at(Vec2 v) const;

 private:
  std::shared_ptr<const VelocityGrid> grid_;
  std::vector<double> values_;
};

/// Maxwellian rho (2 pi T)^{-1} exp(-|v - u|^2 / 2T) in two dimensions.
double maxwellian(Vec2 v, double rho = 1.0, double T = 1.0, Vec2 u = {});

}  // namespace boltzwall
