#pragma once

#include <array>

#include "spsim/model.hpp"

namespace spsim::oracle {

// Exact expected coincidence structure of the HBT measurement, from an
// enumeration over the per-period photon configurations (primary, extra) and
// the 50/50 routings. `a` and `b` are the per-pulse detection probabilities of
// the primary and the extra photon; scale factors common to both cancel.
struct HbtExpectation {
  double central_per_period = 0.0;
  double side_per_period = 0.0;  // per repetition lag
  double g2 = 0.0;
};
HbtExpectation hbt_expectation(double a, double b);

// g2(0) as a function of the device knobs (thinning cancels).
double g2_from_pmp(double p_mp, double eta);

// Inverts g2_from_pmp; g2_target in [0, 0.5).
double calibrate_p_mp(double g2_target, double eta);

// Expected areas of the five central-cluster peaks at {-2,-1,0,+1,+2} pulse
// delays, per period, from the exhaustive enumeration over photon presence,
// arm choices, interference pairings and detector assignments.
struct HomClusterParams {
  double a = 0.0;   // per-slot primary detection probability
  double b = 0.0;   // per-slot extra detection probability
  double nu = 0.0;  // primary pair wavepacket overlap
  double r_reflect = 0.5;
  double one_minus_eps = 1.0;
  bool orthogonal = false;
};
std::array<double, 5> hom_cluster_areas(const HomClusterParams& p);

// Predicted raw visibility 1 - A_par(0)/A_orth(0) for the same parameters.
double predicted_nu_raw(const HomClusterParams& p);

}  // namespace spsim::oracle
