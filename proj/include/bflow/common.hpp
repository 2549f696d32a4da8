#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace bflow {

// All contract violations surface as bflow::Error with a plain-text message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  format_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(const Args&... args) {
  std::ostringstream os;
  detail::format_into(os, args...);
  throw Error(os.str());
}

}  // namespace bflow

#define BFLOW_CHECK(cond, ...)            \
  do {                                    \
    if (!(cond)) ::bflow::fail(__VA_ARGS__); \
  } while (0)
