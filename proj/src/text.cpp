#include "srapf/text.hpp"

#include <array>

#include "srapf/errors.hpp"

namespace srapf {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                : static_cast<char>(c);
}

constexpr std::array<std::string_view, 8> kTemplates = {
    "a photo of a {}.",
    "a bad photo of a {}.",
    "a close-up photo of the {}.",
    "a bright photo of a {}.",
    "a sketch of a {}.",
    "a rendition of the {}.",
    "a cropped photo of a {}.",
    "itap of a {}.",
};

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back(lower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string render_template(std::string_view tmpl, std::string_view class_name) {
  std::string out;
  bool has_slot = false;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out.append(class_name);
      has_slot = true;
      ++i;
    } else {
      out.push_back(tmpl[i]);
    }
  }
  if (!has_slot) {
    throw FormatError("prompt template has no '{}' class slot: \"" +
                      std::string(tmpl) + "\"");
  }
  return out;
}

std::span<const std::string_view> default_prompt_templates() {
  return kTemplates;
}

}  // namespace srapf
