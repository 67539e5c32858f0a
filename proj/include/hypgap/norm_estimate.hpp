#pragma once

// Result record shared by every norm computation: the value together with
// how it was obtained and what it may be trusted for.

#include <string>

namespace hypgap {

enum class NormMethod { PowerIteration, BallTruncation, SelbergGrid };

enum class NormSemantics {
  /// Rayleigh quotient of an iterate: a lower bound once the residual is small.
  LowerBoundUpToResidual,
  /// Supremum over a finite grid plus one local refinement.
  GridEstimate,
};

struct NormEstimate {
  double value = 0.0;
  NormMethod method = NormMethod::PowerIteration;
  int iterations = 0;
  double residual = 0.0;
  NormSemantics semantics = NormSemantics::LowerBoundUpToResidual;
  /// Gain of the local refinement over the plain grid supremum.
  double refine_gap = 0.0;
  int grid_size = 0;
  bool converged = true;
};

inline std::string to_string(NormMethod m) {
  switch (m) {
    case NormMethod::PowerIteration: return "power-iteration";
    case NormMethod::BallTruncation: return "ball-truncation";
    case NormMethod::SelbergGrid: return "selberg-grid";
  }
  return "unknown";
}

inline std::string to_string(NormSemantics s) {
  switch (s) {
    case NormSemantics::LowerBoundUpToResidual: return "lower-bound-up-to-residual";
    case NormSemantics::GridEstimate: return "grid-estimate";
  }
  return "unknown";
}

}  // namespace hypgap
