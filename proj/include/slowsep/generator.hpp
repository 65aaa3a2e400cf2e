#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "slowsep/params.hpp"

namespace slowsep {

// Exact rate matrix of the process over the 2^n enumerated configurations.
// State index encodes the configuration bitwise: bit x of the index is
// eta(x). Row sums are zero; entry (eta, eta^{x,x+1}) = a^n_{x,x+1}.
struct GeneratorMatrix {
  int n = 0;
  Eigen::SparseMatrix<double> L;  // dimension 2^n x 2^n

  int dim() const { return 1 << n; }
};

// Guarded at n <= 12 (2^n rows).
GeneratorMatrix build_generator(const SlowBondParams& params);

// init_dist * exp(micro_time * L), computed by uniformization. Input must be
// a probability vector; output sums to 1 within 1e-10 and tiny negative
// entries are clipped to 0.
Eigen::VectorXd exact_distribution(const GeneratorMatrix& gen, const Eigen::VectorXd& init_dist,
                                   double micro_time);

// Bernoulli(rho) product measure as a vector over enumerated states.
Eigen::VectorXd bernoulli_state_vector(int n, double rho);

// max-norm of nu_rho * L; zero iff nu_rho is exactly invariant.
double stationarity_residual(const GeneratorMatrix& gen, double rho);

// Limit distribution of exact_distribution as t -> inf: the conserved
// particle number splits the chain into sectors, each mixing to uniform.
Eigen::VectorXd stationary_limit(int n, const Eigen::VectorXd& init_dist);

}  // namespace slowsep
