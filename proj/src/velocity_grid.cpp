#include "boltzwall/velocity_grid.hpp"

#include <algorithm>
#include <cmath>

namespace boltzwall {

VelocityGrid::VelocityGrid(double v_max, double h_v) : v_max_(v_max), h_(h_v) {
  if (!(v_max > 0.0) || !(h_v > 0.0) || !std::isfinite(v_max) || !std::isfinite(h_v))
    throw InvalidArgument("velocity grid: V_max and h_v must be positive");
  n_ = static_cast<int>(std::lround(v_max / h_v));
  if (n_ < 1) throw InvalidArgument("velocity grid: h_v larger than V_max");
  if (n_ > 200) throw InvalidArgument("velocity grid: more than 200 nodes per half-axis");
  p_ = static_cast<int>(std::ceil(std::sqrt(2.0) * n_)) + 2;
  const int side = 2 * n_ + 1;
  lookup_.assign(static_cast<std::size_t>(side) * side, -1);
  const double r2 = v_max * v_max * (1.0 + 1e-12);
  for (int j = -n_; j <= n_; ++j) {
    for (int i = -n_; i <= n_; ++i) {
      const Vec2 v{i * h_, j * h_};
      if (norm2(v) > r2) continue;
      // product trapezoid: half weight on the edges of the square [-N h, N h]^2
      double w = h_ * h_;
      if (std::abs(i) == n_) w *= 0.5;
      if (std::abs(j) == n_) w *= 0.5;
      lookup_[(i + n_) + side * (j + n_)] = static_cast<int>(vel_.size());
      vel_.push_back(v);
      w_.push_back(w);
      li_.push_back(i);
      lj_.push_back(j);
      pidx_.push_back(padded_index(i, j));
    }
  }
  mirror_.resize(vel_.size());
  for (std::size_t k = 0; k < vel_.size(); ++k) mirror_[k] = node(-li_[k], -lj_[k]);
}

int VelocityGrid::node(int i, int j) const {
  if (std::abs(i) > n_ || std::abs(j) > n_) return -1;
  return lookup_[(i + n_) + (2 * n_ + 1) * (j + n_)];
}

double VelocityGrid::total_weight() const {
  double s = 0.0;
  for (double w : w_) s += w;
  return s;
}

void VelocityGrid::scatter(std::span<const double> compact, std::span<double> padded) const {
  std::fill(padded.begin(), padded.end(), 0.0);
  for (std::size_t k = 0; k < vel_.size(); ++k) padded[pidx_[k]] = compact[k];
}

double VelocityGrid::interpolate_padded(std::span<const double> padded, Vec2 v) const {
  const double fx = v.x / h_;
  const double fy = v.y / h_;
  const double ix = std::floor(fx);
  const double iy = std::floor(fy);
  if (ix < -p_ || iy < -p_ || ix + 1 > p_ || iy + 1 > p_) return 0.0;
  const double tx = fx - ix;
  const double ty = fy - iy;
  const int base = padded_index(static_cast<int>(ix), static_cast<int>(iy));
  const int s = stride();
  return (1 - tx) * (1 - ty) * padded[base] + tx * (1 - ty) * padded[base + 1] +
         (1 - tx) * ty * padded[base + s] + tx * ty * padded[base + s + 1];
}

std::vector<double> VelocityGrid::sample(const std::function<double(Vec2)>& f) const {
  std::vector<double> out(vel_.size());
  for (std::size_t k = 0; k < vel_.size(); ++k) out[k] = f(vel_[k]);
  return out;
}

SphereQuadrature::SphereQuadrature(int n_sigma) : n(n_sigma) {
  if (n_sigma < 2 || n_sigma % 2 != 0) throw InvalidArgument("sphere quadrature: N_sigma must be even and >= 2");
  for (int k = 0; k < n; ++k) {
    phi.push_back(-kPi + (k + 0.5) * 2.0 * kPi / n);
    weight.push_back(2.0 * kPi / n);
  }
}

VelocityFunction::VelocityFunction(std::shared_ptr<const VelocityGrid> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) throw InvalidArgument("velocity function: size mismatch");
}

VelocityFunction VelocityFunction::sample(std::shared_ptr<const VelocityGrid> grid,
                                          const std::function<double(Vec2)>& f) {
  auto vals = grid->sample(f);
  return VelocityFunction(std::move(grid), std::move(vals));
}

double VelocityFunction::at(Vec2 v) const {
  std::vector<double> padded(grid_->padded_size());
  grid_->scatter(values_, padded);
  return grid_->interpolate_padded(padded, v);
}

double maxwellian(Vec2 v, double rho, double T, Vec2 u) {
  return rho / (2.0 * kPi * T) * std::exp(-norm2(v - u) / (2.0 * T));
}

}  // namespace boltzwall
