#pragma once

#include <optional>
#include <string_view>

namespace energuard {

// RAPL accounting scopes exposed through the powercap filesystem.
// PP0 (all cores) is the default detection domain.
enum class PowerDomain { Package, PP0, PP1, Dram };

constexpr std::string_view to_string(PowerDomain d) {
  switch (d) {
    case PowerDomain::Package: return "package";
    case PowerDomain::PP0: return "pp0";
    case PowerDomain::PP1: return "pp1";
    case PowerDomain::Dram: return "dram";
  }
  return "package";
}

constexpr std::optional<PowerDomain> power_domain_from_string(std::string_view s) {
  if (s == "package") return PowerDomain::Package;
  if (s == "pp0" || s == "core") return PowerDomain::PP0;
  if (s == "pp1" || s == "uncore") return PowerDomain::PP1;
  if (s == "dram") return PowerDomain::Dram;
  return std::nullopt;
}

}  // namespace energuard
