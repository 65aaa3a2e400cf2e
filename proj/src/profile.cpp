#include "slowsep/profile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slowsep {

namespace {

void check_range(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
}

}  // namespace

DensityProfile DensityProfile::constant(double rho) {
  check_range(rho, "constant profile value");
  return DensityProfile([rho](double) { return rho; }, "constant:" + std::to_string(rho));
}

DensityProfile DensityProfile::step(double a, double b) {
  check_range(a, "step profile value");
  check_range(b, "step profile value");
  return DensityProfile([a, b](double u) { return u < 0.5 ? a : b; },
                        "step:" + std::to_string(a) + "," + std::to_string(b));
}

DensityProfile DensityProfile::from_callable(std::function<double(double)> f, std::string name) {
  return DensityProfile(std::move(f), std::move(name));
}

DensityProfile DensityProfile::from_table(std::vector<std::pair<double, double>> table) {
  if (table.size() < 2) throw std::invalid_argument("profile table needs at least two points");
  if (!std::is_sorted(table.begin(), table.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; }))
    throw std::invalid_argument("profile table must be sorted in u");
  for (const auto& [u, v] : table) {
    (void)u;
    check_range(v, "table profile value");
  }
  auto eval = [table](double u) {
    if (u <= table.front().first) return table.front().second;
    if (u >= table.back().first) return table.back().second;
    auto it = std::upper_bound(table.begin(), table.end(), u,
                               [](double x, const auto& p) { return x < p.first; });
    const auto& [u1, v1] = *it;
    const auto& [u0, v0] = *(it - 1);
    const double w = (u - u0) / (u1 - u0);
    return (1.0 - w) * v0 + w * v1;
  };
  return DensityProfile(std::move(eval), "table");
}

DensityProfile DensityProfile::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("profile spec must be name:args");
  const std::string kind = spec.substr(0, colon);
  const std::string args = spec.substr(colon + 1);
  if (kind == "constant") return constant(std::stod(args));
  if (kind == "step") {
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("step profile needs two values");
    return step(std::stod(args.substr(0, comma)), std::stod(args.substr(comma + 1)));
  }
  throw std::invalid_argument("unknown profile kind: " + kind);
}

}  // namespace slowsep
