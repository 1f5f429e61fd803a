#pragma once

// Shared reader/writer for the "JSON header line + raw little-endian arrays"
// container used by field and image files.

#include "corgs/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace corgs::detail {

static_assert(std::endian::native == std::endian::little, "raw formats assume a little-endian host");

inline constexpr std::size_t kMaxHeaderBytes = 1 << 16;

inline void write_header_line(std::ostream& out, const nlohmann::json& header) {
    out << header.dump() << '\n';
}

struct HeaderLine {
    nlohmann::json header;
    std::uint64_t payload_offset = 0;
};

inline HeaderLine read_header_line(std::istream& in) {
    std::string line;
    char ch = 0;
    while (in.get(ch)) {
        if (ch == '\n') {
            break;
        }
        line.push_back(ch);
        if (line.size() > kMaxHeaderBytes) {
            throw FormatError("header line too long", line.size());
        }
    }
    if (ch != '\n') {
        throw FormatError("missing header terminator", line.size());
    }
    HeaderLine result;
    result.payload_offset = line.size() + 1;
    try {
        result.header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("malformed header: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
    }
    if (!result.header.is_object()) {
        throw FormatError("header is not a JSON object", 0);
    }
    return result;
}

inline std::size_t dtype_size(const std::string& dtype, std::uint64_t offset) {
    if (dtype == "<f8") {
        return 8;
    }
    if (dtype == "<f4") {
        return 4;
    }
    throw FormatError("unsupported dtype '" + dtype + "'", offset);
}

/// Reads `count` scalars of `dtype` into `out`, advancing `offset`.
inline void read_array(std::istream& in, const std::string& dtype, std::size_t count, double* out,
                       std::uint64_t& offset, const std::string& name) {
    const std::size_t width = dtype_size(dtype, offset);
    for (std::size_t i = 0; i < count; ++i) {
        char bytes[8];
        in.read(bytes, static_cast<std::streamsize>(width));
        if (in.gcount() != static_cast<std::streamsize>(width)) {
            throw FormatError("truncated payload in array '" + name + "': expected " + std::to_string(count) +
                                  " values, got " + std::to_string(i),
                              offset + static_cast<std::uint64_t>(in.gcount()));
        }
        if (width == 8) {
            out[i] = std::bit_cast<double>(*reinterpret_cast<const std::uint64_t*>(bytes));
        } else {
            out[i] = static_cast<double>(std::bit_cast<float>(*reinterpret_cast<const std::uint32_t*>(bytes)));
        }
        offset += width;
    }
}

inline void write_array(std::ostream& out, const double* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(double)));
}

inline void expect_end(std::istream& in, std::uint64_t offset) {
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError("trailing bytes after payload", offset);
    }
}

}  // namespace corgs::detail
