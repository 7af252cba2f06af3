#include "hdrexp/noise.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace hdrexp {

using nlohmann::json;

void NoiseParameters::validate() const {
  for (std::size_t c = 0; c < 3; ++c) {
    if (!(alpha[c] > 0.0) || !std::isfinite(alpha[c]))
      throw DomainError("noise alpha must be > 0 (ISO " + std::to_string(iso) + ")");
    if (!(beta[c] >= 0.0) || !std::isfinite(beta[c]))
      throw DomainError("noise beta must be >= 0 (ISO " + std::to_string(iso) + ")");
  }
}

std::vector<int> NoiseProfile::isos() const {
  std::vector<int> out;
  for (const auto& e : entries) out.push_back(e.iso);
  return out;
}

const NoiseParameters& NoiseProfile::at_iso(int iso) const {
  for (const auto& e : entries)
    if (e.iso == iso) return e;
  std::ostringstream msg;
  msg << "ISO " << iso << " not in noise profile '" << name << "'; available:";
  for (int v : isos()) msg << ' ' << v;
  throw UnknownIso(msg.str());
}

const NoiseProfile& canon_s100_profile() {
  static const NoiseProfile profile{
      "canon-s100",
      {
          {100, {2.46e-5, 1.67e-5, 7.41e-5}, {3.58e-8, 2.13e-8, 1.28e-7}},
          {200, {4.57e-5, 3.02e-5, 1.32e-4}, {9.89e-8, 6.07e-8, 2.66e-7}},
          {400, {9.12e-5, 5.95e-5, 2.59e-4}, {2.21e-7, 1.72e-7, 5.61e-7}},
          {800, {1.85e-4, 1.19e-4, 5.26e-4}, {4.94e-7, 4.28e-7, 1.14e-6}},
      }};
  return profile;
}

NoiseProfile read_noise_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileReadError("cannot open noise profile: " + path.string());
  NoiseProfile profile;
  try {
    const json doc = json::parse(in);
    profile.name = doc.at("name").get<std::string>();
    for (const json& entry : doc.at("entries")) {
      NoiseParameters p;
      p.iso = entry.at("iso").get<int>();
      p.alpha = entry.at("alpha").get<std::array<double, 3>>();
      p.beta = entry.at("beta").get<std::array<double, 3>>();
      p.validate();
      profile.entries.push_back(p);
    }
  } catch (const json::exception& e) {
    throw DataError("malformed noise profile " + path.string() + ": " + e.what());
  }
  if (profile.entries.empty()) throw DataError("noise profile has no entries: " + path.string());
  return profile;
}

void write_noise_profile(const std::filesystem::path& path, const NoiseProfile& profile) {
  json doc{{"name", profile.name}, {"entries", json::array()}};
  for (const auto& e : profile.entries)
    doc["entries"].push_back({{"iso", e.iso}, {"alpha", e.alpha}, {"beta", e.beta}});
  std::ofstream out(path);
  if (!out) throw FileWriteError("cannot open for writing: " + path.string());
  out << doc.dump(2) << '\n';
}

NoiseProfile resolve_noise_profile(const std::string& name_or_path) {
  if (name_or_path == canon_s100_profile().name) return canon_s100_profile();
  return read_noise_profile(name_or_path);
}

}  // namespace hdrexp
