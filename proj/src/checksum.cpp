#include "ickd/checksum.hpp"

namespace ickd {

std::string to_hex(std::uint64_t x) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[x & 0xF];
        x >>= 4;
    }
    return s;
}

} // namespace ickd
