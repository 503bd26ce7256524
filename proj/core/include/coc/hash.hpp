#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace coc {

// 64-bit FNV-1a. Stable across platforms and runs, which is all the
// call log and candidate hashes need.
class Fnv1a64 {
public:
    Fnv1a64& update(std::string_view bytes) noexcept;
    // Length-prefixed update so ("ab","c") and ("a","bc") hash differently.
    Fnv1a64& field(std::string_view bytes) noexcept;
    Fnv1a64& field(std::uint64_t value) noexcept;
    std::uint64_t digest() const noexcept { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string to_hex(std::uint64_t value);

// Hash used to key verdicts by predicted answer.
std::string candidate_hash(std::string_view predicted);

}  // namespace coc
