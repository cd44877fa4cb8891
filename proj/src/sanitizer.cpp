#include "toolvisor/sanitizer.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

#include "toolvisor/digest.hpp"

namespace toolvisor {

namespace {

constexpr const char* kEllipsisHash = "\xE2\x80\xA6#";  // "…#"
constexpr std::size_t kEllipsisHashLen = 4;             // 3-byte ellipsis + '#'

// Cut point at or below limit that does not split a UTF-8 sequence.
std::size_t utf8_cut(const std::string& s, std::size_t limit) {
  std::size_t cut = std::min(s.size(), limit);
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return cut;
}

void write_json_string(std::ostringstream& out, const std::string& s) {
  out << '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out << "\\\""; break;
      case '\\': out << "\\\\"; break;
      case '\b': out << "\\b"; break;
      case '\f': out << "\\f"; break;
      case '\n': out << "\\n"; break;
      case '\r': out << "\\r"; break;
      case '\t': out << "\\t"; break;
      default:
        if (c < 0x20) {
          static constexpr char kHex[] = "0123456789abcdef";
          out << "\\u00" << kHex[c >> 4] << kHex[c & 0xf];
        } else {
          out << static_cast<char>(c);
        }
    }
  }
  out << '"';
}

void write_canonical(std::ostringstream& out, const Value& v) {
  switch (v.type()) {
    case Value::value_t::null:
      out << "null";
      return;
    case Value::value_t::boolean:
      out << (v.get<bool>() ? "true" : "false");
      return;
    case Value::value_t::number_integer:
    case Value::value_t::number_unsigned:
    case Value::value_t::number_float:
      out << v.dump();
      return;
    case Value::value_t::string: {
      const auto& s = v.get_ref<const std::string&>();
      if (s.size() > kStringTruncationLimit && !is_truncation_digest_form(s)) {
        write_json_string(out, truncation_digest_form(s));
      } else {
        write_json_string(out, s);
      }
      return;
    }
    case Value::value_t::array: {
      out << '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out << ',';
        first = false;
        write_canonical(out, item);
      }
      out << ']';
      return;
    }
    case Value::value_t::object: {
      // nlohmann objects iterate in sorted key order already.
      out << '{';
      bool first = true;
      for (const auto& [key, item] : v.items()) {
        if (!first) out << ',';
        first = false;
        write_json_string(out, key);
        out << ':';
        write_canonical(out, item);
      }
      out << '}';
      return;
    }
    default:
      throw ValueError("value outside the canonical algebra: " + std::string(v.type_name()));
  }
}

bool is_hex_lower(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
}

}  // namespace

std::string to_string(StepStatus s) { return s == StepStatus::kOk ? "ok" : "error"; }

StepStatus step_status_from_string(const std::string& s) {
  if (s == "ok") return StepStatus::kOk;
  if (s == "error") return StepStatus::kError;
  throw std::invalid_argument("unknown step status: " + s);
}

std::string truncation_digest_form(const std::string& s) {
  const std::size_t cut = utf8_cut(s, kStringTruncationLimit);
  return s.substr(0, cut) + kEllipsisHash + sha256_hex(s).substr(0, kDigestSuffixHexLen);
}

bool is_truncation_digest_form(const std::string& s) {
  if (s.size() < kEllipsisHashLen + kDigestSuffixHexLen) return false;
  const std::size_t mark = s.size() - kDigestSuffixHexLen - kEllipsisHashLen;
  if (s.compare(mark, kEllipsisHashLen, kEllipsisHash) != 0) return false;
  for (std::size_t i = s.size() - kDigestSuffixHexLen; i < s.size(); ++i) {
    if (!is_hex_lower(s[i])) return false;
  }
  // The prefix of a genuinely truncated value sits at the limit, minus at
  // most three bytes of UTF-8 boundary backoff.
  return mark <= kStringTruncationLimit && mark + 3 >= kStringTruncationLimit;
}

std::string canonical_value(const Value& v) {
  require_in_algebra(v);
  std::ostringstream out;
  write_canonical(out, v);
  return out.str();
}

std::string canonicalize_args(const Value& args) {
  if (!args.is_object()) throw ValueError("argument map must be an object");
  return canonical_value(args);
}

std::string escape_for_history(const std::string& text) {
  std::string out = text;
  for (char& c : out) {
    if (c == '<') c = '(';
    else if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  return out;
}

std::string summarize_return(const std::string& raw_observation, StepStatus status,
                             std::size_t summary_cap) {
  const std::size_t cut = utf8_cut(raw_observation, summary_cap);
  return to_string(status) + ": " + escape_for_history(raw_observation.substr(0, cut));
}

SanitizedRecord sanitize_record(const RawStepRecord& r, std::size_t summary_cap) {
  SanitizedRecord out;
  out.tool_name_ = r.tool_name;
  out.canonical_args_ = canonicalize_args(r.raw_args);
  out.status_ = r.status;
  out.return_summary_ = summarize_return(r.raw_observation, r.status, summary_cap);
  return out;
}

SanitizedHistory build_history(const std::vector<RawStepRecord>& trace,
                               std::size_t summary_cap) {
  SanitizedHistory h;
  h.records_.reserve(trace.size());
  for (const auto& r : trace) h.records_.push_back(sanitize_record(r, summary_cap));
  return h;
}

std::string render_history(const SanitizedHistory& h) {
  std::ostringstream out;
  out << h.delimiter_open() << '\n';
  std::size_t step = 1;
  for (const auto& rec : h.records()) {
    out << "step=" << step++ << " tool=" << escape_for_history(rec.tool_name())
        << " status=" << to_string(rec.status())
        << " args=" << escape_for_history(rec.canonical_args())
        << " summary=" << rec.return_summary() << '\n';
  }
  out << h.delimiter_close() << '\n';
  return out.str();
}

}  // namespace toolvisor
