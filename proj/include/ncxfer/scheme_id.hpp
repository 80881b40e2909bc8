#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace ncxfer {

enum class SchemeId {
  Contiguous,
  ManualCopy,
  DerivedType,
  BufferedSend,
  OneSidedPut,
  PackElement,
  PackVector,
};

inline constexpr std::array<SchemeId, 7> kAllSchemes = {
    SchemeId::Contiguous,  SchemeId::ManualCopy,  SchemeId::DerivedType, SchemeId::BufferedSend,
    SchemeId::OneSidedPut, SchemeId::PackElement, SchemeId::PackVector,
};

// Names used on the command line and in CSV/JSON output.
constexpr std::string_view cli_name(SchemeId s) {
  switch (s) {
    case SchemeId::Contiguous: return "contiguous";
    case SchemeId::ManualCopy: return "copy";
    case SchemeId::DerivedType: return "derived";
    case SchemeId::BufferedSend: return "buffered";
    case SchemeId::OneSidedPut: return "onesided";
    case SchemeId::PackElement: return "packing-e";
    case SchemeId::PackVector: return "packing-v";
  }
  return "?";
}

// Plot legend labels.
constexpr std::string_view legend_label(SchemeId s) {
  switch (s) {
    case SchemeId::Contiguous: return "contiguous";
    case SchemeId::ManualCopy: return "copying";
    case SchemeId::DerivedType: return "derived type";
    case SchemeId::BufferedSend: return "buffered";
    case SchemeId::OneSidedPut: return "one-sided";
    case SchemeId::PackElement: return "packing(e)";
    case SchemeId::PackVector: return "packing(v)";
  }
  return "?";
}

constexpr std::optional<SchemeId> parse_scheme(std::string_view name) {
  for (SchemeId s : kAllSchemes)
    if (cli_name(s) == name) return s;
  return std::nullopt;
}

constexpr bool is_one_sided(SchemeId s) { return s == SchemeId::OneSidedPut; }

}  // namespace ncxfer
