#include "corgs/field_io.hpp"

#include "corgs/errors.hpp"
#include "raw_format.hpp"

#include <fstream>

namespace corgs {

namespace {

struct ArraySpec {
    const char* name;
    std::size_t columns;
};

constexpr ArraySpec kArrays[] = {
    {"positions", 3}, {"log_scales", 3}, {"rotations", 4}, {"opacities", 1}, {"colors", 3},
};

}  // namespace

void save_field(const GaussianField& field, std::ostream& out) {
    if (!field.consistent()) {
        throw std::invalid_argument("save_field: ragged field");
    }
    const std::size_t n = field.size();
    nlohmann::json arrays = nlohmann::json::array();
    for (const auto& spec : kArrays) {
        nlohmann::json shape = spec.columns == 1 ? nlohmann::json{n} : nlohmann::json{n, spec.columns};
        arrays.push_back({{"name", spec.name}, {"dtype", "<f8"}, {"shape", shape}});
    }
    detail::write_header_line(out, {{"format", "corgs-field"},
                                    {"version", kFieldFormatVersion},
                                    {"count", n},
                                    {"arrays", arrays}});
    for (const auto& block : field.blocks()) {
        detail::write_array(out, block.data(), block.size());
    }
    if (!out) {
        throw std::runtime_error("save_field: write failed");
    }
}

void save_field(const GaussianField& field, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("save_field: cannot open " + path.string());
    }
    save_field(field, out);
}

GaussianField load_field(std::istream& in) {
    const auto [header, payload_offset] = detail::read_header_line(in);
    if (header.value("format", std::string{}) != "corgs-field") {
        throw FormatError("not a corgs-field file", 0);
    }
    if (!header.contains("version") || !header["version"].is_number_integer()) {
        throw FormatError("missing version", 0);
    }
    if (header["version"].get<int>() != kFieldFormatVersion) {
        throw FormatError("unsupported field version " + header["version"].dump(), 0);
    }
    if (!header.contains("count") || !header["count"].is_number_unsigned()) {
        throw FormatError("missing or invalid count", 0);
    }
    const auto n = header["count"].get<std::size_t>();
    const auto& arrays = header.value("arrays", nlohmann::json::array());
    if (!arrays.is_array() || arrays.size() != std::size(kArrays)) {
        throw FormatError("expected 5 arrays in header", 0);
    }

    GaussianField field;
    field.resize(n);
    auto blocks = field.blocks();
    std::uint64_t offset = payload_offset;
    for (std::size_t k = 0; k < std::size(kArrays); ++k) {
        const auto& spec = kArrays[k];
        const auto& entry = arrays[k];
        if (!entry.is_object() || entry.value("name", std::string{}) != spec.name) {
            throw FormatError(std::string("expected array '") + spec.name + "' at position " + std::to_string(k), 0);
        }
        const auto expected_shape =
            spec.columns == 1 ? nlohmann::json{n} : nlohmann::json{n, spec.columns};
        if (entry.value("shape", nlohmann::json{}) != expected_shape) {
            throw FormatError(std::string("array '") + spec.name + "' has shape " +
                                  entry.value("shape", nlohmann::json{}).dump() + ", expected " + expected_shape.dump(),
                              0);
        }
        detail::read_array(in, entry.value("dtype", std::string{}), n * spec.columns, blocks[k].data(), offset,
                           spec.name);
    }
    detail::expect_end(in, offset);
    return field;
}

GaussianField load_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("load_field: cannot open " + path.string());
    }
    return load_field(in);
}

}  // namespace corgs
