#pragma once

#include <filesystem>
#include <string>

#include "mfq/estimator.hpp"
#include "mfq/meanfield.hpp"
#include "mfq/simulator.hpp"

namespace mfq::io {

/// Writes the long-form observation CSV (`k,t,j,rho`, nonzero levels only,
/// k = 0 rows carry the t = 0 state) plus a `<stem>.json` sidecar with
/// {N, m, T, lambda, nu, L, seed, convention}.
void write_observations(const ObservationSet& obs, const std::filesystem::path& csv_path,
                        Convention c);

/// Reads an observation CSV and its sidecar back; throws std::runtime_error
/// with a line reference on malformed input.
ObservationSet read_observations(const std::filesystem::path& csv_path, Convention* c = nullptr);

/// Mean-field path CSV: `t,j,rho`, long form.
void write_path(const MeanFieldPath& path, const std::filesystem::path& csv_path);

std::string report_to_json(const EstimateReport& report);

}  // namespace mfq::io
