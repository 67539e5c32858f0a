// Adjacency-type operator sum of the generators and their inverses on
// random covers of growing degree, next to the free-group value 2 sqrt(3).

#include "hypgap/covers.hpp"

#include <cmath>
#include <cstdio>

using namespace hypgap;

int main() {
  DomainSpec spec;
  spec.generators = {MoebiusMatrix::identity(), MoebiusMatrix::identity()};
  const auto coeffs = scalar_generator_coefficients(spec);

  PowerOptions p;
  p.tol = 1e-7;
  p.check_adjoint = false;
  for (int R : {4, 6, 8}) std::printf("ball R=%d: %.6f\n", R, free_ball_norm(coeffs, R, p).value);
  std::printf("2 sqrt(3) = %.6f\n", 2.0 * std::sqrt(3.0));

  for (int n : {20, 100, 500}) {
    const CoverSample cover = sample_cover(n, 2, trial_seed(7, n));
    PowerOptions q;
    q.tol = 1e-9;
    q.seed = cover.seed;
    const auto est = cover_operator_norm(CoverOperator<Eigen::MatrixXd>(coeffs, cover), q);
    std::printf("n=%4d transitive=%d  norm on zero-mean functions %.6f\n", n, is_transitive(cover) ? 1 : 0,
                est.value);
  }
  return 0;
}
