#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace coc {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Combines a seed with a list of discriminators (stage, depth, branch...)
// into a derived seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) noexcept;

// mt19937_64 is specified bit-exactly by the standard; the distributions
// and std::shuffle are not, so bounded draws and shuffles are done here.
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace coc
