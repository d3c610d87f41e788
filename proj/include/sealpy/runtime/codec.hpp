#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sealpy::runtime {

class corrupt_stream : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Container layout (little-endian):
//   [0..4)   magic "MZL1"
//   [4..12)  original length, u64
//   tokens:  0x00 len:varint <len literal bytes>
//            0x01 dist:varint len:varint      back-reference, dist <= window
namespace codec {
inline constexpr char magic[4] = {'M', 'Z', 'L', '1'};
inline constexpr std::size_t header_size = 12;
inline constexpr std::size_t window_size = 32 * 1024;
inline constexpr std::size_t min_match = 4;
inline constexpr std::size_t max_match = 1024;
inline constexpr std::uint8_t literal_token = 0x00;
inline constexpr std::uint8_t match_token = 0x01;
inline constexpr std::uint64_t default_max_output = std::uint64_t{1} << 30;
} // namespace codec

std::vector<std::uint8_t> codec_compress(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> codec_decompress(std::span<const std::uint8_t> data,
                                           std::uint64_t max_output = codec::default_max_output);

std::string codec_compress(const std::string& data);
std::string codec_decompress(const std::string& data,
                             std::uint64_t max_output = codec::default_max_output);

} // namespace sealpy::runtime
