#include "zsfuse/error.hpp"

#include "zsfuse/method.hpp"

namespace zsfuse {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::usage: return "usage error";
        case ErrorKind::format: return "format error";
        case ErrorKind::corruption: return "corruption error";
        case ErrorKind::validation: return "validation error";
        case ErrorKind::config: return "configuration error";
        case ErrorKind::degenerate: return "degenerate input";
        case ErrorKind::io: return "I/O error";
    }
    return "error";
}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::usage: return 1;
        case ErrorKind::io: return 3;
        default: return 2;
    }
}

std::optional<Method> parse_method(std::string_view s) noexcept {
    for (Method m : kAllMethods) {
        if (s == to_string(m)) return m;
    }
    if (s == "M1" || s == "m1") return Method::text_image_clip;
    if (s == "M2" || s == "m2") return Method::image_image_clip;
    if (s == "M3" || s == "m3") return Method::image_image_dino;
    return std::nullopt;
}

}  // namespace zsfuse
