#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace srcl {

/// Counter-based deterministic random stream. A stream is a pure function of
/// (key, draw index), so equal seeds give identical sequences on every
/// platform. Streams are split by purpose label or index; a fork is derived
/// from the parent's key only, never from its draw position, so adding one
/// consumer cannot perturb another.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    RandomStream fork(std::string_view label) const;
    RandomStream fork(std::uint64_t index) const;

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();
    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);
    /// Standard normal via Box-Muller. Consumes two draws.
    double normal();
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    RandomStream() = default;

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace srcl
