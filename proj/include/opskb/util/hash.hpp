#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace opskb {

/// 64-bit FNV-1a over raw bytes.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// splitmix64 step: advances the state and returns the next value.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Incremental SHA-256, enough for file/content digests in manifests.
class Sha256 {
  public:
    Sha256();
    void update(const void* data, std::size_t len);
    void update(std::string_view data) { update(data.data(), data.size()); }
    /// Finalizes and returns the 32-byte digest. The object must not be
    /// updated afterwards.
    std::array<std::uint8_t, 32> digest();

  private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[8];
    std::uint64_t length_ = 0;
    std::uint8_t buffer_[64];
    std::size_t buffered_ = 0;
};

/// Hex digest of a whole buffer.
std::string sha256_hex(std::string_view data);

}  // namespace opskb
