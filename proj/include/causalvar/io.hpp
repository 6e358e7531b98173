#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

#include "causalvar/bounds.hpp"
#include "causalvar/estimators.hpp"
#include "causalvar/interventions.hpp"
#include "causalvar/model.hpp"
#include "causalvar/risk.hpp"
#include "causalvar/var_process.hpp"

namespace causalvar {

using Json = nlohmann::json;

/// {"d", "p", "coeffs": [A_1, ..., A_p] each row-major flat (or a bare number
/// when d = 1, or nested rows), "noise_variance"}.
Json toJson(const VarModel& model);
VarModel modelFromJson(const Json& j);

/// {"kind", "omega", "components" (1-based), "values" | "alpha", "steps"}.
Json toJson(const InterventionSpec& spec);
InterventionSpec specFromJson(const Json& j);

Json toJson(const RiskReport& report);
Json toJson(const BoundReport& report);
Json toJson(const FitResult& fit);

std::string toString(InterventionKind kind);
std::string toString(RiskMethod method);

Json readJsonFile(const std::string& path);

/// Header t,x_1,...,x_d then one row per time point.
void writePathCsv(std::ostream& out, const SamplePath& path);
void writePathCsv(const std::string& file, const SamplePath& path);
SamplePath readPathCsv(const std::string& file);

/// Full-precision decimal text, "nan" / "inf" for non-finite values.
std::string formatNumber(double v);

/// key = value lines; '#' starts a comment. Throws ConfigError with the line
/// number on malformed input.
std::map<std::string, std::string> parseKeyValue(std::istream& in, const std::string& source = "config");
std::map<std::string, std::string> readKeyValueFile(const std::string& file);

}  // namespace causalvar
