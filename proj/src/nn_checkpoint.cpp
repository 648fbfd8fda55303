#include "tmr/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tmr::nn {

namespace {

void put_u16(std::ostream& os, uint16_t v) {
    unsigned char b[2] = {(unsigned char)(v & 0xFF), (unsigned char)(v >> 8)};
    os.write(reinterpret_cast<char*>(b), 2);
}

void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (unsigned char)((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<char*>(b), 8);
}

uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return uint16_t(b[0]) | (uint16_t(b[1]) << 8);
}

uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(b[i]) << (8 * i);
    return v;
}

uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(b[i]) << (8 * i);
    return v;
}

}  // namespace

void write_weights(const std::filesystem::path& file,
                   const std::vector<std::pair<std::string, const std::vector<float>*>>& tensors) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + file.string());
    os.write("TMRW", 4);
    put_u32(os, uint32_t(tensors.size()));
    for (const auto& [name, data] : tensors) {
        put_u16(os, uint16_t(name.size()));
        os.write(name.data(), std::streamsize(name.size()));
        put_u64(os, data->size());
        // float bit pattern, little-endian host assumed for the raw write
        os.write(reinterpret_cast<const char*>(data->data()), std::streamsize(data->size() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("short write: " + file.string());
}

std::map<std::string, std::vector<float>> read_weights(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + file.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "TMRW", 4) != 0) {
        throw std::runtime_error("bad weights file magic: " + file.string());
    }
    uint32_t count = get_u32(is);
    std::map<std::string, std::vector<float>> out;
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t len = get_u16(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        uint64_t n = get_u64(is);
        std::vector<float> data(n);
        is.read(reinterpret_cast<char*>(data.data()), std::streamsize(n * sizeof(float)));
        if (!is) throw std::runtime_error("truncated weights file: " + file.string());
        out.emplace(std::move(name), std::move(data));
    }
    return out;
}

std::string file_checksum(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + file.string());
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (is) {
        is.read(buf, sizeof(buf));
        std::streamsize got = is.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= (unsigned char)buf[i];
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", (unsigned long long)h);
    return std::string(hex);
}

}  // namespace tmr::nn
