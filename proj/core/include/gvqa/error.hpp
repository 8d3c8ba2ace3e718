#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace gvqa {

// All recoverable failures surface as gvqa::Error. Validation results that are
// data (e.g. tubelet violations) are returned as values instead.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}

template <class T, class... Rest>
void format_into(std::ostringstream& os, const T& head, const Rest&... rest) {
    os << head;
    format_into(os, rest...);
}
} // namespace detail

template <class... Parts>
[[noreturn]] void raise(const Parts&... parts) {
    std::ostringstream os;
    detail::format_into(os, parts...);
    throw Error(os.str());
}

template <class... Parts>
void require(bool ok, const Parts&... parts) {
    if (!ok) {
        raise(parts...);
    }
}

} // namespace gvqa
