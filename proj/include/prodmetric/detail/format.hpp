#ifndef PRODMETRIC_DETAIL_FORMAT_HPP
#define PRODMETRIC_DETAIL_FORMAT_HPP

#include <charconv>
#include <string>
#include <system_error>

namespace prodmetric::detail {

// Shortest round-trip decimal representation. Deterministic across runs,
// which the structured output formats rely on.
inline std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace prodmetric::detail

#endif  // PRODMETRIC_DETAIL_FORMAT_HPP
