#include "toolvisor/value.hpp"

#include "toolvisor/sanitizer.hpp"

namespace toolvisor {

void require_in_algebra(const Value& v) {
  switch (v.type()) {
    case Value::value_t::null:
    case Value::value_t::boolean:
    case Value::value_t::number_integer:
    case Value::value_t::number_unsigned:
    case Value::value_t::number_float:
    case Value::value_t::string:
      return;
    case Value::value_t::array:
      for (const auto& item : v) require_in_algebra(item);
      return;
    case Value::value_t::object:
      for (const auto& [key, item] : v.items()) {
        (void)key;
        require_in_algebra(item);
      }
      return;
    default:
      throw ValueError("value outside the string/number/boolean/map/list/null algebra: " +
                       std::string(v.type_name()));
  }
}

std::string value_text(const Value& v) {
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s.size() > kStringTruncationLimit && !is_truncation_digest_form(s)) {
      return truncation_digest_form(s);
    }
    return s;
  }
  return canonical_value(v);
}

}  // namespace toolvisor
