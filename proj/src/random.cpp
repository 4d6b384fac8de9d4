#include "srcl/random.hpp"

#include <cmath>
#include <stdexcept>

namespace srcl {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t hash_label(std::string_view label) {
    // FNV-1a, then scrambled.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return mix(h);
}

} // namespace

RandomStream::RandomStream(std::uint64_t seed) : key_(mix(seed + kGolden)) {}

RandomStream RandomStream::fork(std::string_view label) const {
    RandomStream child;
    child.key_ = mix(key_ ^ hash_label(label));
    return child;
}

RandomStream RandomStream::fork(std::uint64_t index) const {
    RandomStream child;
    child.key_ = mix(key_ ^ mix(index + kGolden));
    return child;
}

std::uint64_t RandomStream::next_u64() {
    ++counter_;
    return mix(key_ + counter_ * kGolden);
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

double RandomStream::normal() {
    // u1 in (0, 1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

std::uint64_t RandomStream::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("RandomStream::below requires n > 0");
    // Multiply-shift on the top 32 bits; bias is below 2^-32 for the sizes
    // used here.
    return ((next_u64() >> 32) * n) >> 32;
}

} // namespace srcl
