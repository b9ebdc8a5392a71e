#pragma once

#include <optional>
#include <string>

#include "biasalert/bias_type.hpp"

namespace biasalert {

/// Gold annotation for one sentence.
struct GoldLabel {
  bool biased = false;
  std::optional<BiasType> bias_type;
  std::optional<std::string> group;
  std::optional<std::string> attribute;

  bool operator==(const GoldLabel&) const = default;

  static GoldLabel unbiased() { return {}; }
  static GoldLabel make_biased(BiasType type, std::string group, std::string attribute) {
    return {true, type, std::move(group), std::move(attribute)};
  }
};

struct LabeledExample {
  std::string id;
  std::string text;
  GoldLabel gold;

  bool operator==(const LabeledExample&) const = default;
};

/// Throws InvalidArgument when biased without a type, or unbiased with any
/// type/group/attribute set.
void validate(const GoldLabel& label);

}  // namespace biasalert
