#pragma once

#include "condlim/shift.hpp"
#include "condlim/transfer.hpp"

namespace condlim {

struct Promoted {
  RealFunction h;  // g∘T^shift, future-only
  int shift = 0;
};

Promoted promote_to_future(const RealFunction& g, int shift = -1);  // default shift = past depth
// h∘T^{-shift} on the window [-shift, d - shift); needs d > shift.
RealFunction demote(const RealFunction& h, int shift);

struct TransferOptions {
  double tol = 1e-13;
  int max_terms = 100000;
  double mean_tol = 1e-10;
};

struct TransferSolution {
  RealFunction h;  // Σ_{n>=1} ℒⁿ g
  int terms = 0;
  double tail_bound = 0.0;
  double contraction = 0.0;
  double residual = 0.0;  // ∥h − ℒh − ℒg∥∞
};

TransferSolution solve_transfer_equation(const GibbsModel& model, const RealFunction& g,
                                         const TransferOptions& opts = {});

struct MartingaleOptions {
  double mean_tol = 1e-10;
  double cob_tol = 1e-9;
  bool throw_on_coboundary = true;
  TransferOptions transfer;
};

// f = f0 + h∘T − h with f0 future-only and ℒ_ψ f0 = 0. h is two-sided when f
// is, and shifted by a constant so that its sup-norm is minimal.
struct MartingaleData {
  RealFunction f0;
  RealFunction h;
  double sigma2 = 0.0;
  int neumann_terms = 0;
  double tail_bound = 0.0;
  bool is_coboundary = false;
  double martingale_defect = 0.0;  // max over n <= 3 of the exact increment identity error
  int shift = 0;                   // promotion used

  // Constant c with max{t-c,0} <= V(t) <= max{t,0}+c.
  double bound_constant() const { return 2.0 * h.sup_norm() + f0.sup_norm(); }
};

MartingaleData martingale_part(const GibbsModel& model, const RealFunction& f, const MartingaleOptions& opts = {});

// max over pasts a (|a| = n-1) and anchors z of
// |Σ_b e^{-ψ(b·a·z)} Š_n f0(b·a·z) − Š_{n-1} f0(a·z)|.
double martingale_increment_defect(const GibbsModel& model, const RealFunction& f0, int n);

struct GreenKubo {
  double sigma2 = 0.0;
  int terms = 0;
  double tail_bound = 0.0;
};

// ν(f²) + 2 Σ_{n>=1} ν(f·f∘Tⁿ) from a forward chain on windows built from ν⁺ masses.
GreenKubo green_kubo_variance(const GibbsModel& model, const RealFunction& f);

struct Truncation {
  RealFunction g_m;
  double error_bound = 0.0;
};

// g_m = g0 + h_m∘T − h_m with h_m the restriction of h to coordinates >= -m
// (midrange over the cut coordinates; h_0 = 0).
Truncation truncate_past(const GibbsModel& model, const RealFunction& g, int m);

}  // namespace condlim
