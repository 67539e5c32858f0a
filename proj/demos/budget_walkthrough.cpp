// Prints the pieces of the budget for one s0: cusp certificate, the T that
// brings the free remainder norm under 1/5, and the support size at that T
// on a coarse mesh.

#include "hypgap/certify.hpp"

#include <cstdio>
#include <cstdlib>

using namespace hypgap;

int main(int argc, char** argv) {
  const double s0 = argc > 1 ? std::atof(argv[1]) : 0.8;
  const CuspBudget cusp = cusp_error_certificate(s0);
  std::printf("s0 = %.3f  gap abscissa s0(1-s0) = %.4f\n", s0, s0 * (1.0 - s0));
  std::printf("cusp: C = %.4f  eps = %.5f  cutoff width = %.1f  certificate = %.4f\n", cusp.C, cusp.epsilon,
              cusp.cutoff.width, cusp.certificate);

  const ChooseTResult ct = choose_T(s0);
  std::printf("choose_T: T = %.0f with free remainder norm %.4f\n", ct.T, ct.norm);

  const DomainSpec spec = gamma2_domain();
  const Mesh mesh = build_mesh(spec, 2.0, 0.3);
  const double T = std::min(ct.T, 4.0);
  const auto S = enumerate_S(T, mesh.points, spec);
  std::printf("coarse mesh: %zu points, area %.4f; |S| at T = %.0f: %zu\n", mesh.size(), mesh.total_weight(), T,
              S.size());
  return 0;
}
