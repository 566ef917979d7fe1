#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the oracle policy, dedup and the toy tokenizer.
namespace manidialog::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Lowercased alphanumeric words (also keeps '_' and '-' inside a word).
std::vector<std::string> words(std::string_view s);

bool starts_with_vowel(std::string_view word);

/// Joins with `sep`.
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// 64-bit FNV-1a, stable across platforms. Used for run manifests and
/// deterministic template choice.
std::uint64_t fnv1a(std::string_view s);

}  // namespace manidialog::text
