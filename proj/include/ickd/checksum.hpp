#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace ickd {

// FNV-1a, 64 bit. Fast, stable, and good enough to detect any accidental
// mutation of a bank or checkpoint between epochs.
class Fnv1a64 {
public:
    Fnv1a64& update(const void* data, std::size_t n) noexcept {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001B3ULL;
        }
        return *this;
    }

    Fnv1a64& update_f64(const std::vector<double>& v) noexcept {
        return update(v.data(), v.size() * sizeof(double));
    }

    Fnv1a64& update_u64(std::uint64_t x) noexcept { return update(&x, sizeof(x)); }

    std::uint64_t digest() const noexcept { return hash_; }

private:
    std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

std::string to_hex(std::uint64_t x);

} // namespace ickd
