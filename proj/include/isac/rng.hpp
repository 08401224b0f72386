#pragma once

#include <cstdint>
#include <initializer_list>

namespace isac {

// Mixes a base seed with stream coordinates (splitmix64 finaliser per coordinate).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords)
{
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base);
    for (auto c : coords)
        h = mix(h ^ mix(c));
    return h;
}

} // namespace isac
