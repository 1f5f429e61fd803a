#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace corgs {

/// Malformed or truncated on-disk data. `offset` is the byte position at
/// which parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// Non-finite primitive parameters encountered while rasterizing.
class RenderError : public std::runtime_error {
public:
    RenderError(const std::string& what, std::size_t primitive)
        : std::runtime_error(what), primitive_(primitive) {}

    std::size_t primitive() const noexcept { return primitive_; }

private:
    std::size_t primitive_;
};

/// Training diverged (non-finite loss).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace corgs
