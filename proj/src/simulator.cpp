#include "mfq/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfq {

double gillespie_step(StateCounts& state, const Params& p, Rng& rng) {
  auto& counts = state.counts;
  const double n = static_cast<double>(state.N);
  const std::int64_t busy = state.N - counts[0];
  const double arrival_rate = n * p.lambda;
  const double total = arrival_rate + p.nu * static_cast<double>(busy);
  if (total <= 0.0) return std::numeric_limits<double>::infinity();

  const double dt = rng.exponential(total);
  if (rng.uniform() * total < arrival_rate) {
    // Shortest of L uniform picks has length j w.p. S_j^L - S_{j+1}^L where
    // S_j is the fraction of queues with length >= j. Equivalently: the level
    // j with S_{j+1} <= u^(1/L) < S_j.
    const double v = std::pow(rng.uniform(), 1.0 / p.L);
    std::int64_t above = state.N;  // N * S_j
    int j = 0;
    const double target = v * n;
    while (true) {
      const std::int64_t here = j < static_cast<int>(counts.size()) ? counts[j] : 0;
      if (static_cast<double>(above - here) <= target) break;
      above -= here;
      ++j;
    }
    if (j + 1 >= static_cast<int>(counts.size())) counts.resize(j + 2, 0);
    --counts[j];
    ++counts[j + 1];
  } else {
    // departure from a uniformly chosen busy server; integer index keeps the
    // cumulative walk exact
    std::int64_t target = std::min<std::int64_t>(
        busy - 1, static_cast<std::int64_t>(rng.uniform() * static_cast<double>(busy)));
    int j = 1;
    while (target >= counts[j]) {
      target -= counts[j];
      ++j;
    }
    --counts[j];
    ++counts[j - 1];
  }
  return dt;
}

ObservationSet simulate(const Params& p, std::int64_t N, const StateCounts& initial,
                        int m, std::uint64_t seed) {
  p.validate();
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (initial.N != N) throw std::invalid_argument("initial state N mismatch");
  initial.validate();

  ObservationSet obs;
  obs.N = N;
  obs.m = m;
  obs.T = p.T;
  obs.params = p;
  obs.seed = seed;
  obs.initial = initial.measure();
  obs.grid.resize(m);
  for (int k = 1; k <= m; ++k) obs.grid[k - 1] = p.T * k / m;
  obs.measures.reserve(m);

  Rng rng(seed);
  StateCounts st = initial;
  double now = 0.0;
  long long events = 0;
  int k = 1;
  while (k <= m) {
    StateCounts before = st;
    const double dt = gillespie_step(st, p, rng);
    const double event_time = now + dt;
    // the state over [now, event_time) is the pre-event one; an observation
    // exactly at the event time takes the post-jump state
    while (k <= m && obs.grid[k - 1] < event_time) {
      obs.measures.push_back(before.measure());
      ++k;
    }
    if (event_time <= p.T) ++events;
    now = event_time;
  }
  obs.events = events;

  // pad measures to a common level count
  std::size_t levels = obs.initial.size();
  for (const auto& v : obs.measures) levels = std::max(levels, v.size());
  obs.initial.resize(levels, 0.0);
  for (auto& v : obs.measures) v.resize(levels, 0.0);
  return obs;
}

std::vector<ObservationSet> replicate(const Params& p, std::int64_t N,
                                      const StateCounts& initial, int m,
                                      std::uint64_t base_seed, int count) {
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  std::vector<ObservationSet> out;
  out.reserve(count);
  for (int r = 0; r < count; ++r)
    out.push_back(simulate(p, N, initial, m, Rng::derive_stream(base_seed, r)));
  return out;
}

}  // namespace mfq
