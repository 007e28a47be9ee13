#pragma once

// Little-endian primitive encoding for the dataset and checkpoint formats.

#include "fne/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace fne::io {

template <typename T>
T to_little(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

class Writer {
public:
    template <typename T>
    void put(T v) {
        v = to_little(v);
        const auto* p = reinterpret_cast<const unsigned char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }
    template <typename T>
    void put_array(std::span<const T> values) {
        for (const T& v : values) {
            put(v);
        }
    }
    void put_bytes(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

    const std::vector<unsigned char>& bytes() const noexcept { return buf_; }

private:
    std::vector<unsigned char> buf_;
};

class Reader {
public:
    Reader(std::span<const unsigned char> data, std::string context)
        : data_(data), context_(std::move(context)) {}

    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == data_.size(); }

    void require(std::size_t n) const {
        if (n > remaining()) {
            throw Error(Errc::truncated, context_ + ": truncated payload");
        }
    }

    template <typename T>
    T get() {
        require(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little(v);
    }

    // Checks the byte budget before allocating.
    template <typename T>
    std::vector<T> get_array(std::uint64_t count) {
        if (count > remaining() / sizeof(T)) {
            throw Error(Errc::truncated, context_ + ": truncated payload");
        }
        std::vector<T> out(static_cast<std::size_t>(count));
        for (auto& v : out) {
            v = get<T>();
        }
        return out;
    }

    std::string get_bytes(std::size_t n) {
        require(n);
        std::string out(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return out;
    }

    const std::string& context() const noexcept { return context_; }

private:
    std::span<const unsigned char> data_;
    std::size_t pos_ = 0;
    std::string context_;
};

std::vector<unsigned char> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<unsigned char>& bytes);

} // namespace fne::io
