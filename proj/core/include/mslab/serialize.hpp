#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mslab/estimators.hpp"
#include "mslab/laws.hpp"
#include "mslab/linalg.hpp"
#include "mslab/microstates.hpp"

namespace mslab {

using Json = nlohmann::json;

/// {"n": N, "re": [[...]], "im": [[...]]}, row-major.
Json matrix_to_json(const CMatrix& a);
CMatrix matrix_from_json(const Json& j);
HermitianMatrix hermitian_from_json(const Json& j);
UnitaryMatrix unitary_from_json(const Json& j);

/// {"groups": [[matrix, ...], ...]}: one list of matrices per group.
Json base_to_json(const std::vector<HermitianTuple>& base);
std::vector<HermitianTuple> base_from_json(const Json& j);

/// {"groups": [{"r": r, "rho": [...]}, ...], "unitaries": s, "max_degree": m,
///  "label": ..., "moments": [{"word": "X[1,1] X[2,1]", "re": .., "im": ..}, ...]}.
/// The empty word is omitted; every other word of degree <= m must be listed.
Json law_to_json(const NCLaw& law);
NCLaw law_from_json(const Json& j);

Json membership_to_json(const MembershipReport& report, const Alphabet& alphabet);
Json volume_to_json(const VolumeEstimate& e);
Json fubini_to_json(const FubiniRecord& r);

/// Non-finite doubles become the strings "inf", "-inf", "nan" (JSON has no literals for them).
Json number(double x);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace mslab
