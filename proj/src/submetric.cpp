#include "dialeval/submetric.hpp"

#include "dialeval/error.hpp"

namespace dialeval {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::VSP: return "VSP";
    case Family::NSP: return "NSP";
    case Family::MLM: return "MLM";
    case Family::ENG: return "ENG";
    case Family::LLM: return "LLM";
  }
  return "VSP";
}

Family parse_family(std::string_view s) {
  for (auto f : {Family::VSP, Family::NSP, Family::MLM, Family::ENG, Family::LLM})
    if (to_string(f) == s) return f;
  throw data_error("unknown submetric family '" + std::string(s) + "'");
}

std::string SubmetricId::key() const { return std::string(to_string(family)) + "-" + variant; }

SubmetricId SubmetricId::parse(std::string_view key) {
  const auto dash = key.find('-');
  if (dash == std::string_view::npos || dash + 1 >= key.size())
    throw data_error("malformed submetric key '" + std::string(key) + "'");
  return {parse_family(key.substr(0, dash)), std::string(key.substr(dash + 1))};
}

}  // namespace dialeval
