#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace gazelens {

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives an independent stream seed for a named component. The component
/// name is hashed and mixed into the master seed, then each index is folded in
/// turn, so adding a new component never shifts the streams of existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::string_view component,
                          std::initializer_list<std::uint64_t> indices = {}) noexcept;

}  // namespace gazelens
