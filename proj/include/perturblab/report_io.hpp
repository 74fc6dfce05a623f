#pragma once

#include <string>

#include "perturblab/experiment.hpp"

namespace plab {

/// JSON with non-finite doubles encoded as strings ("inf", "-inf", "nan"),
/// since JSON has no literals for them.
ordered_json json_number(double x);
double number_from_json(const ordered_json& j);

ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const ordered_json& j);

ordered_json verdict_to_json(const TransversalityVerdict& v);
ordered_json sf_profile_to_json(const SfProfile& p);

/// Deterministic report body: stable key order, no timing, perturbation
/// matrices recorded for failing trials.
ordered_json report_to_json(const ExperimentReport& report);
ReportDigest digest_from_json(const ordered_json& j);

/// Fixed header: trial,seed,scenario,pass,margin,witness
std::string trials_csv(const ExperimentReport& report);

/// Witness tuples of the multi-point machinery:
/// chart id, parameters, image coordinates, margin.
std::string witness_csv(const ChartedMap& g,
                        const std::vector<CrossingCheck>& checks);

ordered_json aggregate_to_json(const AggregateSummary& summary);

std::string format_point(int chart, const Eigen::VectorXd& v);
std::string format_tuple(const MultiPoint& mp);

}  // namespace plab
