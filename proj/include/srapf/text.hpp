#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srapf {

// Lower-cased word tokens. ASCII letters/digits and any non-ASCII byte count
// as word characters; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);

// Replaces every "{}" slot with `class_name`. Throws FormatError when the
// template has no slot.
std::string render_template(std::string_view tmpl, std::string_view class_name);

// Prompt ensemble used for classifier initialization. The first entry is the
// anchor text for retrieval ranking.
std::span<const std::string_view> default_prompt_templates();

}  // namespace srapf
