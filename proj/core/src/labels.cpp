#include "biasalert/labels.hpp"

#include "biasalert/error.hpp"

namespace biasalert {

void validate(const GoldLabel& label) {
  if (label.biased && !label.bias_type) {
    throw InvalidArgument("biased label has no bias type");
  }
  if (!label.biased && (label.bias_type || label.group || label.attribute)) {
    throw InvalidArgument("unbiased label carries a type, group or attribute");
  }
}

}  // namespace biasalert
