#include "dafd/types.hpp"

#include "dafd/error.hpp"
#include "dafd/text_io.hpp"

namespace dafd {

std::string_view to_string(Label label) { return label == Label::kFall ? "Fall" : "ADL"; }

std::string_view to_string(Domain domain) {
  return domain == Domain::kTarget ? "target" : "source";
}

Label parse_label(std::string_view text) {
  const std::string lower = to_lower(trim(text));
  if (lower == "fall" || lower == "1") return Label::kFall;
  if (lower == "adl" || lower == "0") return Label::kAdl;
  throw DataError("unknown label: '" + std::string(text) + "'");
}

Domain parse_domain(std::string_view text) {
  const std::string lower = to_lower(trim(text));
  if (lower == "source" || lower == "0") return Domain::kSource;
  if (lower == "target" || lower == "1") return Domain::kTarget;
  throw DataError("unknown domain: '" + std::string(text) + "'");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace dafd
