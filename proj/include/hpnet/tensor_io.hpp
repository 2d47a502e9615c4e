// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hpnet/errors.hpp"
#include "hpnet/tensor.hpp"

// .hpt tensor file, bit-exact layout:
//   4 bytes magic "HPT1" (0x48 0x50 0x54 0x31)
//   1 byte dtype code (0x00 = f32)
//   1 byte ndim
//   2 reserved zero bytes
//   ndim little-endian u32 dims
//   row-major little-endian f32 payload

namespace hpnet {

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace detail

inline std::string encode_hpt(const Tensor& t) {
    if (t.ndim() == 0 || t.ndim() > 255) throw validation_error("hpt: ndim must be in [1,255]");
    std::string out;
    out.reserve(8 + 4 * t.ndim() + 4 * t.numel());
    out += "HPT1";
    out.push_back('\x00'); // dtype f32
    out.push_back(static_cast<char>(t.ndim()));
    out.push_back('\x00');
    out.push_back('\x00');
    for (std::size_t d : t.shape) {
        if (d > 0xffffffffull) throw validation_error("hpt: dimension exceeds u32");
        detail::put_u32_le(out, static_cast<std::uint32_t>(d));
    }
    for (float v : t.data) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        detail::put_u32_le(out, bits);
    }
    return out;
}

inline Tensor decode_hpt(const std::string& bytes, const std::string& origin = "<memory>") {
    const auto fail = [&](const std::string& why) -> Tensor {
        throw io_error("hpt '" + origin + "': " + why);
    };
    if (bytes.size() < 8) return fail("truncated header");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (std::memcmp(p, "HPT1", 4) != 0) return fail("bad magic");
    if (p[4] != 0x00) return fail("unsupported dtype code");
    const std::size_t ndim = p[5];
    if (ndim == 0) return fail("zero ndim");
    if (bytes.size() < 8 + 4 * ndim) return fail("truncated dims");
    std::vector<std::size_t> dims(ndim);
    std::size_t numel = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        dims[i] = detail::get_u32_le(p + 8 + 4 * i);
        if (dims[i] == 0) return fail("zero dimension");
        numel *= dims[i];
    }
    const std::size_t payload_at = 8 + 4 * ndim;
    if (bytes.size() != payload_at + 4 * numel) return fail("payload size mismatch");
    std::vector<float> values(numel);
    for (std::size_t i = 0; i < numel; ++i) {
        const std::uint32_t bits = detail::get_u32_le(p + payload_at + 4 * i);
        std::memcpy(&values[i], &bits, 4);
    }
    return Tensor(std::move(dims), std::move(values));
}

inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("cannot open for write: " + tmp.string());
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw io_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw io_error("rename failed: " + path.string() + " (" + ec.message() + ")");
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return bytes;
}

inline void save_hpt(const std::filesystem::path& path, const Tensor& t) {
    write_file_atomic(path, encode_hpt(t));
}

inline Tensor load_hpt(const std::filesystem::path& path) {
    return decode_hpt(read_file(path), path.string());
}

} // namespace hpnet
