#include "slowsep/generator.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace slowsep {

GeneratorMatrix build_generator(const SlowBondParams& params) {
  params.validate();
  if (params.n > 12)
    throw std::invalid_argument("build_generator: n > 12 would enumerate more than 4096 states");
  const int n = params.n;
  const int dim = 1 << n;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(dim) * (n + 1));
  for (int state = 0; state < dim; ++state) {
    double out_rate = 0.0;
    for (int b = 0; b < n; ++b) {
      const int x = b;
      const int y = (b + 1 == n) ? 0 : b + 1;
      const int bx = (state >> x) & 1;
      const int by = (state >> y) & 1;
      if (bx == by) continue;  // no-op swap, no state change
      const double rate = swap_rate(params, b);
      if (rate == 0.0) continue;
      const int target = state ^ (1 << x) ^ (1 << y);
      trips.emplace_back(state, target, rate);
      out_rate += rate;
    }
    trips.emplace_back(state, state, -out_rate);
  }

  GeneratorMatrix gen;
  gen.n = n;
  gen.L.resize(dim, dim);
  gen.L.setFromTriplets(trips.begin(), trips.end());
  return gen;
}

Eigen::VectorXd exact_distribution(const GeneratorMatrix& gen, const Eigen::VectorXd& init_dist,
                                   double micro_time) {
  const int dim = gen.dim();
  if (init_dist.size() != dim) throw std::invalid_argument("distribution size mismatch");
  if ((init_dist.array() < -1e-12).any() || std::abs(init_dist.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("init_dist is not a probability vector");
  if (micro_time < 0.0) throw std::invalid_argument("micro_time must be >= 0");
  if (micro_time == 0.0) return init_dist;

  // Uniformization: P = I + L/lambda is substochastic-free, and
  // p(t) = sum_k Poisson(lambda t; k) p0 P^k.
  double lambda = 0.0;
  for (int i = 0; i < dim; ++i) lambda = std::max(lambda, -gen.L.coeff(i, i));
  if (lambda == 0.0) return init_dist;
  lambda *= 1.05;  // margin keeps P entries strictly positive on the diagonal

  const double mu = lambda * micro_time;
  const int kmax = static_cast<int>(mu + 10.0 * std::sqrt(mu) + 50.0);

  Eigen::VectorXd term = init_dist;  // p0 P^k, as a row vector held transposed
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  const Eigen::SparseMatrix<double> Lt = gen.L.transpose();
  for (int k = 0; k <= kmax; ++k) {
    const double logw = -mu + k * std::log(mu) - std::lgamma(k + 1.0);
    const double w = std::exp(logw);
    if (w > 0.0) acc += w * term;
    if (k < kmax) {
      Eigen::VectorXd next = term + (Lt * term) / lambda;
      term.swap(next);
    }
  }

  acc = acc.cwiseMax(0.0);
  const double s = acc.sum();
  if (std::abs(s - 1.0) > 1e-8)
    throw std::runtime_error("uniformization lost probability mass");
  return acc / s;
}

Eigen::VectorXd bernoulli_state_vector(int n, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0,1]");
  const int dim = 1 << n;
  Eigen::VectorXd nu(dim);
  for (int state = 0; state < dim; ++state) {
    const int k = std::popcount(static_cast<unsigned>(state));
    nu[state] = std::pow(rho, k) * std::pow(1.0 - rho, n - k);
  }
  return nu;
}

double stationarity_residual(const GeneratorMatrix& gen, double rho) {
  const Eigen::VectorXd nu = bernoulli_state_vector(gen.n, rho);
  const Eigen::VectorXd r = gen.L.transpose() * nu;  // row vector nu * L
  return r.cwiseAbs().maxCoeff();
}

Eigen::VectorXd stationary_limit(int n, const Eigen::VectorXd& init_dist) {
  const int dim = 1 << n;
  if (init_dist.size() != dim) throw std::invalid_argument("distribution size mismatch");
  Eigen::VectorXd sector_mass = Eigen::VectorXd::Zero(n + 1);
  Eigen::VectorXd sector_size = Eigen::VectorXd::Zero(n + 1);
  for (int state = 0; state < dim; ++state) {
    const int k = std::popcount(static_cast<unsigned>(state));
    sector_mass[k] += init_dist[state];
    sector_size[k] += 1.0;
  }
  Eigen::VectorXd out(dim);
  for (int state = 0; state < dim; ++state) {
    const int k = std::popcount(static_cast<unsigned>(state));
    out[state] = sector_mass[k] / sector_size[k];
  }
  return out;
}

}  // namespace slowsep
