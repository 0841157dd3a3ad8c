#include "uqeval/npy_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "npy I/O assumes a little-endian host");

namespace uqeval {

namespace {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::string header_dict(std::string_view descr, const Shape& shape) {
    return "{'descr': '" + std::string(descr) + "', 'fortran_order': False, 'shape': (" +
           std::to_string(shape.depth) + ", " + std::to_string(shape.height) + ", " +
           std::to_string(shape.width) + "), }";
}

// Extracts the raw text of one dict entry, up to the next top-level comma.
std::string dict_value(const std::string& header, const std::string& key,
                       const std::string& path) {
    const std::string needle = "'" + key + "':";
    std::size_t pos = header.find(needle);
    if (pos == std::string::npos) {
        throw ValidationError(path + ": npy header missing key '" + key + "'");
    }
    pos += needle.size();
    int depth = 0;
    std::size_t end = pos;
    while (end < header.size()) {
        char c = header[end];
        if (c == '(' || c == '[') ++depth;
        if (c == ')' || c == ']') --depth;
        if (depth == 0 && (c == ',' || c == '}')) break;
        ++end;
    }
    std::size_t begin = header.find_first_not_of(" \t", pos);
    std::size_t last = header.find_last_not_of(" \t", end - 1);
    if (begin == std::string::npos || last < begin) {
        throw ValidationError(path + ": empty npy header value for '" + key + "'");
    }
    return header.substr(begin, last - begin + 1);
}

Shape parse_shape(const std::string& text, const std::string& path) {
    if (text.size() < 2 || text.front() != '(' || text.back() != ')') {
        throw ValidationError(path + ": malformed npy shape tuple " + text);
    }
    std::vector<std::size_t> dims;
    std::size_t i = 1;
    while (i < text.size() - 1) {
        while (i < text.size() - 1 && (text[i] == ' ' || text[i] == ',')) ++i;
        if (i >= text.size() - 1) break;
        std::size_t j = i;
        while (j < text.size() - 1 && text[j] >= '0' && text[j] <= '9') ++j;
        if (j == i) {
            throw ValidationError(path + ": malformed npy shape tuple " + text);
        }
        dims.push_back(std::stoull(text.substr(i, j - i)));
        i = j;
    }
    if (dims.size() != 3) {
        throw ValidationError(path + ": expected a 3D array, got " +
                              std::to_string(dims.size()) + "D shape " + text);
    }
    return Shape{dims[0], dims[1], dims[2]};
}

} // namespace

Volume3D load_array(const std::filesystem::path& path, VolumeKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 6) != 0) {
        throw ValidationError(path.string() + ": not an npy file (bad magic)");
    }
    if (magic[6] != 1 || magic[7] != 0) {
        throw ValidationError(path.string() + ": unsupported npy version " +
                              std::to_string(int(magic[6])) + "." + std::to_string(int(magic[7])));
    }
    unsigned char len_bytes[2];
    in.read(reinterpret_cast<char*>(len_bytes), 2);
    if (!in) {
        throw ValidationError(path.string() + ": truncated npy header");
    }
    const std::size_t header_len = std::size_t(len_bytes[0]) | (std::size_t(len_bytes[1]) << 8);
    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    if (!in || header.empty() || header.back() != '\n') {
        throw ValidationError(path.string() + ": malformed npy header");
    }

    const std::string descr = dict_value(header, "descr", path.string());
    const std::string fortran = dict_value(header, "fortran_order", path.string());
    const Shape shape = parse_shape(dict_value(header, "shape", path.string()), path.string());

    if (fortran != "False") {
        throw ValidationError(path.string() + ": fortran_order must be False");
    }
    const bool is_u1 = descr == "'|u1'";
    const bool is_f4 = descr == "'<f4'";
    if (!is_u1 && !is_f4) {
        throw ValidationError(path.string() + ": unsupported dtype " + descr +
                              " (expected '<f4' or '|u1')");
    }
    if (is_u1 && kind != VolumeKind::binary) {
        throw ValidationError(path.string() + ": dtype '|u1' is only valid for binary masks");
    }

    const std::size_t n = shape.total();
    std::vector<float> data(n);
    if (is_u1) {
        std::vector<std::uint8_t> raw(n);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
        if (!in) {
            throw ValidationError(path.string() + ": truncated npy payload");
        }
        for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<float>(raw[i]);
    } else {
        in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * 4));
        if (!in) {
            throw ValidationError(path.string() + ": truncated npy payload");
        }
    }
    try {
        return Volume3D(shape, kind, std::move(data));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void save_array(const Volume3D& volume, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    const bool binary = volume.kind() == VolumeKind::binary;
    const std::string dict = header_dict(binary ? "|u1" : "<f4", volume.shape());
    // magic + version + length field + dict + padding + '\n', 64-byte aligned
    const std::size_t unpadded = 6 + 2 + 2 + dict.size() + 1;
    const std::size_t pad = (64 - unpadded % 64) % 64;
    const std::size_t header_len = dict.size() + pad + 1;

    out.write(kMagic, 6);
    out.put(1);
    out.put(0);
    out.put(static_cast<char>(header_len & 0xff));
    out.put(static_cast<char>((header_len >> 8) & 0xff));
    out << dict << std::string(pad, ' ') << '\n';

    const std::size_t n = volume.size();
    if (binary) {
        std::vector<std::uint8_t> raw(n);
        for (std::size_t i = 0; i < n; ++i) raw[i] = volume[i] != 0.0f ? 1 : 0;
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(n));
    } else {
        out.write(reinterpret_cast<const char*>(volume.data().data()),
                  static_cast<std::streamsize>(n * 4));
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

} // namespace uqeval
