#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace notifsurv::detail {

// 64-bit FNV-1a. Used for stable keys (schema ids, per-user split and RNG
// substreams), never for integrity.
constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// splitmix64 finalizer, decorrelates nearby keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t keyed_hash(std::string_view id, std::uint64_t seed) noexcept
{
    return mix64(fnv1a64(id) ^ mix64(seed));
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace notifsurv::detail
