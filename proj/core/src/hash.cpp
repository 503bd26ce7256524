#include "coc/hash.hpp"

#include <array>

namespace coc {

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
}

Fnv1a64& Fnv1a64::update(std::string_view bytes) noexcept {
    for (unsigned char c : bytes) {
        state_ ^= c;
        state_ *= kFnvPrime;
    }
    return *this;
}

Fnv1a64& Fnv1a64::field(std::string_view bytes) noexcept {
    field(static_cast<std::uint64_t>(bytes.size()));
    return update(bytes);
}

Fnv1a64& Fnv1a64::field(std::uint64_t value) noexcept {
    std::array<char, 8> raw{};
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<char>((value >> (8 * i)) & 0xff);
    }
    return update(std::string_view(raw.data(), raw.size()));
}

std::string Fnv1a64::hex() const { return to_hex(state_); }

std::uint64_t fnv1a64(std::string_view bytes) noexcept { return Fnv1a64{}.update(bytes).digest(); }

std::string to_hex(std::uint64_t value) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::string candidate_hash(std::string_view predicted) { return to_hex(fnv1a64(predicted)); }

}  // namespace coc
