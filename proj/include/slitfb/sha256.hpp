#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace slitfb {

/// Incremental SHA-256 (FIPS 180-4). Used to fingerprint run artifacts in
/// manifests, so it only needs to be correct and deterministic, not fast.
class Sha256 {
  public:
    Sha256();

    void update(const void* data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }

    /// Finalizes and returns the digest as 64 lowercase hex characters.
    /// The object must not be updated afterwards.
    std::string hex_digest();

    /// One-shot digest of a byte string.
    static std::string of(std::string_view s);

    /// Digest of a file's contents. Throws std::runtime_error when the file
    /// cannot be opened.
    static std::string of_file(const std::string& path);

  private:
    void process_block(const unsigned char* block);

    std::uint32_t state_[8];
    std::uint64_t bit_count_ = 0;
    unsigned char buffer_[64];
    std::size_t buffer_len_ = 0;
};

} // namespace slitfb
