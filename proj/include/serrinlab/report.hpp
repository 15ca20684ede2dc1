#pragma once

#include "serrinlab/identity.hpp"
#include "serrinlab/polynomial.hpp"
#include "serrinlab/spectral.hpp"
#include "serrinlab/stability.hpp"
#include "serrinlab/study.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace serrinlab {

using Json = nlohmann::ordered_json;

/// Domain files:
///   {"rho0": 1.0, "modes": [[k, a, b], ...], "center": [x, y]}
///   {"ellipse": [a, b], "center": [x, y]}
/// Every key is optional; {} is the unit disk.
StarDomain domain_from_json(const Json& j);
Json domain_to_json(const StarDomain& domain);
/// Reads a domain file, or parses the argument itself when it starts with '{'.
StarDomain load_domain(const std::string& path_or_inline);

Json to_json(const Vec2& x);
Json to_json(const DomainMeasures& m);
Json to_json(const IdentityReport& r);
Json to_json(const RigidityVerdict& r);
Json to_json(const DeviationSet& d);
Json to_json(const GeometricBoundsReport& r);
Json to_json(const OscillationReport& r);
Json to_json(const StrongDeviationReport& r);
Json to_json(const L2OscillationReport& r);
Json to_json(const EigenResult& r);  // without the eigenfunction
Json to_json(const ExponentFit& f);
Json to_json(const StabilityRecord& r);
Json to_json(const FamilySpec& s);
/// Spec and fits; the records go to CSV.
Json fit_summary(const SweepResult& s);
Json to_json(const ConvergenceStudy& s);
Json to_json(const PointwiseCase& c);

struct RunManifest {
  std::string command;
  std::string config_hash;
  Json config;
  Json domain;
  Json mesh;
  std::vector<std::uint64_t> seeds;
  std::string tool_version;
  std::string timestamp;
  std::vector<std::string> artifacts;
};
Json to_json(const RunManifest& m);

/// 64-bit FNV-1a of the compact dump of `config` with keys sorted, as 16 hex digits.
std::string config_hash(const Json& config);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// One StabilityRecord per row, header first.
void write_sweep_csv(std::ostream& out, const SweepResult& s);

/// Pretty-printed with a trailing newline. Throws std::runtime_error on I/O failure.
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace serrinlab
