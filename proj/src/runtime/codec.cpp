#include "sealpy/runtime/codec.hpp"

#include <algorithm>
#include <cstring>

namespace sealpy::runtime {
namespace {

constexpr std::size_t hash_bits = 15;
constexpr std::size_t hash_size = std::size_t{1} << hash_bits;
constexpr int max_chain = 48;
constexpr std::int64_t no_pos = -1;

void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<std::uint8_t>(v | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t hash4(const std::uint8_t* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return (v * 2654435761u) >> (32 - hash_bits);
}

void flush_literals(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> data,
                    std::size_t begin, std::size_t end) {
    if (begin == end) return;
    out.push_back(codec::literal_token);
    put_varint(out, end - begin);
    out.insert(out.end(), data.begin() + static_cast<std::ptrdiff_t>(begin),
               data.begin() + static_cast<std::ptrdiff_t>(end));
}

class reader {
  public:
    explicit reader(std::span<const std::uint8_t> in) : in_(in) {}

    bool done() const { return pos_ == in_.size(); }

    std::uint8_t byte() {
        if (pos_ >= in_.size()) throw corrupt_stream("truncated stream");
        return in_[pos_++];
    }

    std::uint64_t varint() {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            const std::uint8_t b = byte();
            const std::uint64_t bits = b & 0x7f;
            if (shift == 63 && bits > 1) throw corrupt_stream("varint overflow");
            v |= bits << shift;
            if ((b & 0x80) == 0) return v;
        }
        throw corrupt_stream("varint too long");
    }

    std::span<const std::uint8_t> take(std::uint64_t n) {
        if (n > in_.size() - pos_) throw corrupt_stream("literal run past end of stream");
        auto s = in_.subspan(pos_, static_cast<std::size_t>(n));
        pos_ += static_cast<std::size_t>(n);
        return s;
    }

  private:
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> codec_compress(std::span<const std::uint8_t> data) {
    std::vector<std::uint8_t> out(codec::magic, codec::magic + 4);
    const std::uint64_t n = data.size();
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));

    std::vector<std::int64_t> head(hash_size, no_pos);
    std::vector<std::int64_t> prev(data.size(), no_pos);
    auto insert = [&](std::size_t pos) {
        if (pos + codec::min_match > data.size()) return;
        const std::uint32_t h = hash4(&data[pos]);
        prev[pos] = head[h];
        head[h] = static_cast<std::int64_t>(pos);
    };

    std::size_t pos = 0;
    std::size_t literal_start = 0;
    while (pos < data.size()) {
        std::size_t best_len = 0;
        std::size_t best_dist = 0;
        if (pos + codec::min_match <= data.size()) {
            const std::size_t limit = std::min(codec::max_match, data.size() - pos);
            std::int64_t cand = head[hash4(&data[pos])];
            for (int chain = 0; cand != no_pos && chain < max_chain; ++chain) {
                const auto c = static_cast<std::size_t>(cand);
                const std::size_t dist = pos - c;
                if (dist > codec::window_size) break;
                std::size_t len = 0;
                while (len < limit && data[c + len] == data[pos + len]) ++len;
                if (len > best_len) {
                    best_len = len;
                    best_dist = dist;
                    if (len == limit) break;
                }
                cand = prev[c];
            }
        }
        if (best_len >= codec::min_match) {
            flush_literals(out, data, literal_start, pos);
            out.push_back(codec::match_token);
            put_varint(out, best_dist);
            put_varint(out, best_len);
            for (std::size_t i = 0; i < best_len; ++i) insert(pos + i);
            pos += best_len;
            literal_start = pos;
        } else {
            insert(pos);
            ++pos;
        }
    }
    flush_literals(out, data, literal_start, pos);
    return out;
}

std::vector<std::uint8_t> codec_decompress(std::span<const std::uint8_t> data,
                                           std::uint64_t max_output) {
    if (data.size() < codec::header_size || std::memcmp(data.data(), codec::magic, 4) != 0) {
        throw corrupt_stream("missing MZL1 header");
    }
    std::uint64_t expected = 0;
    for (int i = 0; i < 8; ++i) expected |= std::uint64_t{data[4 + i]} << (8 * i);
    if (expected > max_output) {
        throw corrupt_stream("declared length exceeds output limit");
    }

    std::vector<std::uint8_t> out;
    reader in(data.subspan(codec::header_size));
    while (!in.done()) {
        const std::uint8_t tag = in.byte();
        if (tag == codec::literal_token) {
            const std::uint64_t len = in.varint();
            if (len == 0 || len > expected - out.size()) throw corrupt_stream("bad literal length");
            auto bytes = in.take(len);
            out.insert(out.end(), bytes.begin(), bytes.end());
        } else if (tag == codec::match_token) {
            const std::uint64_t dist = in.varint();
            const std::uint64_t len = in.varint();
            if (dist == 0 || dist > codec::window_size || dist > out.size()) {
                throw corrupt_stream("back-reference distance out of range");
            }
            if (len == 0 || len > expected - out.size()) throw corrupt_stream("bad match length");
            const std::size_t from = out.size() - static_cast<std::size_t>(dist);
            for (std::size_t i = 0; i < len; ++i) {
                const std::uint8_t b = out[from + i];
                out.push_back(b);
            }
        } else {
            throw corrupt_stream("unknown token");
        }
    }
    if (out.size() != expected) {
        throw corrupt_stream("stream ended before declared length");
    }
    return out;
}

std::string codec_compress(const std::string& data) {
    auto bytes = codec_compress(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
    return std::string(bytes.begin(), bytes.end());
}

std::string codec_decompress(const std::string& data, std::uint64_t max_output) {
    auto bytes = codec_decompress(
        std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()), max_output);
    return std::string(bytes.begin(), bytes.end());
}

} // namespace sealpy::runtime
