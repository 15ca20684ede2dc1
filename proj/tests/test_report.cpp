#include "serrinlab/errors.hpp"
#include "serrinlab/report.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace serrinlab;

namespace {

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::size_t count_fields(const std::string& line) { return std::size_t(std::count(line.begin(), line.end(), ',')) + 1; }

}  // namespace

TEST_CASE("domain JSON round trip") {
  const StarDomain d = StarDomain::fourier(1.5, {{2, 0.05, 0.0}, {3, 0.0, -0.02}}, Vec2(0.5, -1.0));
  const StarDomain back = domain_from_json(domain_to_json(d));
  CHECK(back.fingerprint() == d.fingerprint());
  const StarDomain e = load_domain(R"({"ellipse": [2, 1], "center": [1, 0]})");
  CHECK(e.is_ellipse());
  CHECK(e.center().x() == 1.0);
  CHECK(domain_from_json(domain_to_json(e)).fingerprint() == e.fingerprint());
  CHECK(load_domain("{}").fingerprint() == StarDomain::disk().fingerprint());
  CHECK_THROWS_AS(domain_from_json(Json::parse(R"({"modes": [[2, 0.1]]})")), Error);
  CHECK_THROWS_AS(domain_from_json(Json::parse(R"({"modes": [[1, 0.9, 0]]})")), Error);
  CHECK_THROWS(load_domain("/nonexistent/domain.json"));
}

TEST_CASE("config hash") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(config_hash(Json::object()) == fnv1a_hex("{}"));
  Json a = {{"b", 1}, {"a", {{"y", 2.5}, {"x", "s"}}}};
  Json b = {{"a", {{"x", "s"}, {"y", 2.5}}}, {"b", 1}};
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) == fnv1a_hex(R"({"a":{"x":"s","y":2.5},"b":1})"));
  b["b"] = 2;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("identity report JSON") {
  IdentityReport r;
  r.id = IdentityId::neumann_1_11;
  r.terms = {{"volume_hessian_h", 1.0}, {"boundary_curvature_hn", -2.0}};
  r.lhs = 1.0;
  r.rhs = 1.0;
  const Json j = to_json(r);
  CHECK(j["identity_id"] == "neumann_1_11");
  CHECK(j["anchor"].get<std::string>() == std::string(anchor(IdentityId::neumann_1_11)));
  CHECK(j["terms"].begin().key() == "volume_hessian_h");
  CHECK(j["terms"]["boundary_curvature_hn"] == -2.0);
}

TEST_CASE("sweep CSV shape and manifest") {
  SweepResult s;
  StabilityRecord r;
  r.epsilon = 0.05;
  r.rho_gap = 0.1;
  r.psi_values = {{"uniform", 0.09}};
  s.records.push_back(r);
  r.epsilon = 0.1;
  r.flagged = true;
  r.flag_reason = "NotTorsion: a, b";
  s.records.push_back(r);
  std::ostringstream out;
  write_sweep_csv(out, s);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::size_t rows = 0;
  while (std::getline(in, row)) {
    CHECK(count_fields(row) == count_fields(header));
    ++rows;
  }
  CHECK(rows == 2);

  RunManifest m;
  m.command = "sweep";
  m.config = {{"mode", 2}};
  m.config_hash = config_hash(m.config);
  m.artifacts = {"out/sweep.csv"};
  const auto path = std::filesystem::temp_directory_path() / "serrinlab_manifest_test.json";
  write_json(path, to_json(m));
  std::ifstream f(path);
  const Json back = Json::parse(f);
  CHECK(back["config_hash"] == m.config_hash);
  CHECK(back["artifacts"][0] == "out/sweep.csv");
  std::filesystem::remove(path);
  CHECK(utc_timestamp().size() == 20);
}
