#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace slowsep {

// Initial density profile rho0 : [0,1) -> [0,1]. Either a callable or a
// sampled table with linear interpolation, so CLI configs stay serializable.
class DensityProfile {
 public:
  static DensityProfile constant(double rho);
  // Value a on [0, 1/2), b on [1/2, 1).
  static DensityProfile step(double a, double b);
  static DensityProfile from_callable(std::function<double(double)> f, std::string name = "callable");
  // Sorted (u, rho0(u)) pairs; evaluation interpolates linearly and clamps
  // outside the tabulated range.
  static DensityProfile from_table(std::vector<std::pair<double, double>> table);
  // Named built-ins: "constant:0.5", "step:0.8,0.2".
  static DensityProfile parse(const std::string& spec);

  double operator()(double u) const { return eval_(u); }
  const std::string& name() const { return name_; }

 private:
  DensityProfile(std::function<double(double)> f, std::string name)
      : eval_(std::move(f)), name_(std::move(name)) {}

  std::function<double(double)> eval_;
  std::string name_;
};

}  // namespace slowsep
