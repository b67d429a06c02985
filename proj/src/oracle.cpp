#include "spsim/oracle.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace spsim::oracle {

HbtExpectation hbt_expectation(double a, double b) {
  HbtExpectation e;
  // Presence configurations of (primary, extra); routing enumerated per pair.
  double mean_d1 = 0.0;
  for (int prim = 0; prim <= 1; ++prim) {
    for (int extra = 0; extra <= 1; ++extra) {
      double p = (prim ? a : 1.0 - a) * (extra ? b : 1.0 - b);
      int n = prim + extra;
      mean_d1 += p * 0.5 * n;
      if (n == 2) {
        // Four equal routings of two photons over a 50/50 splitter; two of
        // them put the photons on opposite detectors.
        e.central_per_period += p * 0.5;
      }
    }
  }
  e.side_per_period = mean_d1 * mean_d1;  // D1(i) x D2(i+k), symmetric channels
  e.g2 = e.side_per_period > 0.0 ? e.central_per_period / e.side_per_period : 0.0;
  return e;
}

double g2_from_pmp(double p_mp, double eta) {
  return hbt_expectation(eta, p_mp).g2;
}

double calibrate_p_mp(double g2_target, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("calibrate_p_mp: eta must be positive");
  if (g2_target < 0.0 || g2_target >= 0.5)
    throw std::invalid_argument("calibrate_p_mp: g2 target must be in [0, 0.5)");
  if (g2_target == 0.0) return 0.0;
  double lo = 0.0, hi = std::min(1.0, eta);  // g2 increases up to p_mp = eta
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (g2_from_pmp(mid, eta) < g2_target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

struct OraclePhoton {
  int slot;      // 0 = early, 1 = late
  bool primary;
  double prob;
};

struct Placed {
  int arrival;   // slot + long, in pulse-delay units
  int port;      // 0 = short-arm input, 1 = long-arm input
  int pol;       // 0 = H, 1 = V
  bool primary;
};

struct Tally {
  std::array<double, 5> area{};
};

// One concrete (presence, arms) configuration: enumerate the interference
// pairings the bench's nearest-first greedy matching can produce (uniform over
// the greedy's tie choices) and add each photon pair's expected coincidence
// probability into its delay bucket.
void eval_config(const std::vector<Placed>& ph, double weight, const HomClusterParams& prm,
                 Tally& tally) {
  double R = prm.r_reflect, T = 1.0 - prm.r_reflect;
  double c2 = prm.one_minus_eps * prm.one_minus_eps;
  std::vector<std::pair<int, int>> cands;
  for (int i = 0; i < static_cast<int>(ph.size()); ++i)
    for (int j = i + 1; j < static_cast<int>(ph.size()); ++j)
      if (ph[i].arrival == ph[j].arrival && ph[i].port != ph[j].port)
        cands.emplace_back(i, j);

  struct Walk {
    std::vector<std::pair<int, int>> remaining;
    std::vector<std::pair<int, int>> matched;
    double w;
  };
  std::vector<Walk> stack{{cands, {}, weight}};
  while (!stack.empty()) {
    Walk wk = std::move(stack.back());
    stack.pop_back();
    if (wk.remaining.empty()) {
      std::vector<int> partner(ph.size(), -1);
      for (auto [i, j] : wk.matched) {
        partner[static_cast<std::size_t>(i)] = j;
        partner[static_cast<std::size_t>(j)] = i;
      }
      for (int i = 0; i < static_cast<int>(ph.size()); ++i) {
        for (int j = i + 1; j < static_cast<int>(ph.size()); ++j) {
          // tau = t(D2) - t(D1): the coincidence splits between the two delay
          // signs according to which photon ends up on D1.
          int bucket_ij = ph[j].arrival - ph[i].arrival + 2;  // i on D1
          int bucket_ji = ph[i].arrival - ph[j].arrival + 2;  // j on D1
          double p_ij, p_ji;
          if (partner[static_cast<std::size_t>(i)] == j) {
            double nu_eff =
                (ph[i].primary && ph[j].primary && ph[i].pol == ph[j].pol) ? prm.nu : 0.0;
            double nut = c2 * nu_eff;
            double pc = R * R + T * T - 2.0 * R * T * nut;
            // Orientation split of the pair rule, normalized to the pinned
            // coincidence total: transmit-transmit ~ T^2 - RT nut,
            // reflect-reflect ~ R^2 - RT nut (clamped).
            double w_tt = std::max(T * T - R * T * nut, 0.0);
            double w_rr = std::max(R * R - R * T * nut, 0.0);
            double wsum = w_tt + w_rr;
            double f_tt = wsum > 0.0 ? w_tt / wsum : 0.5;
            bool i_at_a = ph[i].port == 0;
            p_ij = pc * (i_at_a ? f_tt : 1.0 - f_tt);  // photon i lands on D1
            p_ji = pc * (i_at_a ? 1.0 - f_tt : f_tt);
          } else {
            // Independent routing; the pair rule preserves single-photon
            // marginals, so cross pairs always combine marginals.
            double pi1 = ph[i].port == 0 ? T : R;
            double pj1 = ph[j].port == 0 ? T : R;
            p_ij = pi1 * (1.0 - pj1);
            p_ji = (1.0 - pi1) * pj1;
          }
          if (bucket_ij >= 0 && bucket_ij < 5)
            tally.area[static_cast<std::size_t>(bucket_ij)] += wk.w * p_ij;
          if (bucket_ji >= 0 && bucket_ji < 5)
            tally.area[static_cast<std::size_t>(bucket_ji)] += wk.w * p_ji;
        }
      }
      continue;
    }
    // The greedy step picks the closest-in-time candidate; within one slot the
    // emission times are exchangeable, so every remaining candidate is the
    // closest with equal probability.
    double share = wk.w / static_cast<double>(wk.remaining.size());
    for (const auto& pick : wk.remaining) {
      Walk next;
      next.w = share;
      next.matched = wk.matched;
      next.matched.push_back(pick);
      for (const auto& c : wk.remaining)
        if (c.first != pick.first && c.first != pick.second && c.second != pick.first &&
            c.second != pick.second)
          next.remaining.push_back(c);
      stack.push_back(std::move(next));
    }
  }
}

}  // namespace

std::array<double, 5> hom_cluster_areas(const HomClusterParams& prm) {
  const OraclePhoton kinds[4] = {
      {0, true, prm.a}, {0, false, prm.b}, {1, true, prm.a}, {1, false, prm.b}};
  Tally tally;
  for (std::uint32_t mask = 0; mask < 16; ++mask) {
    double p_mask = 1.0;
    std::vector<OraclePhoton> present;
    for (int k = 0; k < 4; ++k) {
      if (mask & (1u << k)) {
        p_mask *= kinds[k].prob;
        present.push_back(kinds[k]);
      } else {
        p_mask *= 1.0 - kinds[k].prob;
      }
    }
    if (present.size() < 2 || p_mask == 0.0) continue;
    std::uint32_t n_arms = 1u << present.size();
    double p_arm = p_mask / static_cast<double>(n_arms);
    for (std::uint32_t arms = 0; arms < n_arms; ++arms) {
      std::vector<Placed> placed;
      placed.reserve(present.size());
      for (std::size_t k = 0; k < present.size(); ++k) {
        bool long_arm = arms & (1u << k);
        placed.push_back({present[k].slot + (long_arm ? 1 : 0), long_arm ? 1 : 0,
                          prm.orthogonal && long_arm ? 1 : 0, present[k].primary});
      }
      eval_config(placed, p_arm, prm, tally);
    }
  }
  return tally.area;
}

double predicted_nu_raw(const HomClusterParams& p) {
  HomClusterParams par = p;
  par.orthogonal = false;
  HomClusterParams orth = p;
  orth.orthogonal = true;
  double a_par = hom_cluster_areas(par)[2];
  double a_orth = hom_cluster_areas(orth)[2];
  return a_orth > 0.0 ? 1.0 - a_par / a_orth : 0.0;
}

}  // namespace spsim::oracle
