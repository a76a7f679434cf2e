#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace zsfuse {

/// The three alignment routes that get fused.
enum class Method {
    text_image_clip,   // test image vs. class prompt, contrastive backbone
    image_image_clip,  // test image vs. reference images, contrastive backbone
    image_image_dino,  // test image vs. reference images, self-distilled backbone
};

inline constexpr std::array<Method, 3> kAllMethods = {
    Method::text_image_clip, Method::image_image_clip, Method::image_image_dino};

constexpr std::size_t index_of(Method m) noexcept { return static_cast<std::size_t>(m); }

constexpr std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::text_image_clip: return "text_image_clip";
        case Method::image_image_clip: return "image_image_clip";
        case Method::image_image_dino: return "image_image_dino";
    }
    return "unknown";
}

/// Accepts the canonical tag or the short aliases M1, M2, M3.
std::optional<Method> parse_method(std::string_view s) noexcept;

/// Backbone consumed by a method unless the bundle overrides it.
constexpr std::string_view default_backbone(Method m) noexcept {
    return m == Method::image_image_dino ? "dino" : "clip";
}

}  // namespace zsfuse
