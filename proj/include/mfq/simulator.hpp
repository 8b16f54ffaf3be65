#pragma once

#include <cstdint>
#include <vector>

#include "mfq/params.hpp"
#include "mfq/rng.hpp"
#include "mfq/simplex.hpp"

namespace mfq {

/// The dataset D^{N,m}: empirical measures at t_k = kT/m plus the t = 0 state.
struct ObservationSet {
  std::int64_t N = 0;
  int m = 0;
  double T = 0.0;
  Params params;  // generating parameters, carried for metadata
  std::uint64_t seed = 0;
  std::vector<double> grid;                  // t_k, k = 1..m
  std::vector<double> initial;               // rho^N(0)
  std::vector<std::vector<double>> measures;  // rho^N(t_k), k = 1..m

  const std::vector<double>& terminal() const { return measures.back(); }
  long long events = 0;  // telemetry: jump count over [0, T]
};

/// One Gillespie event applied in place: returns the holding time drawn.
/// Consumes exactly one exponential plus one or two uniforms.
double gillespie_step(StateCounts& state, const Params& p, Rng& rng);

/// Exact CTMC simulation over [0, T] with observations at t_k = kT/m.
/// Deterministic given (seed, inputs); observations are the post-jump state.
ObservationSet simulate(const Params& p, std::int64_t N, const StateCounts& initial,
                        int m, std::uint64_t seed);

/// `count` independent replications; replication r uses the stream
/// Rng::derive_stream(base_seed, r), so results are order-independent.
std::vector<ObservationSet> replicate(const Params& p, std::int64_t N,
                                      const StateCounts& initial, int m,
                                      std::uint64_t base_seed, int count);

}  // namespace mfq
