#include "bevo/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "bevo/errors.hpp"

namespace bevo {

namespace {
constexpr char kMagic[8] = {'B', 'E', 'V', 'O', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError("checkpoint: truncated file");
    return v;
}
}  // namespace

const nn::Tensor* NamedTensors::find(const std::string& name) const {
    for (const auto& [n, t] : items) {
        if (n == name) return &t;
    }
    return nullptr;
}

void write_tensor_file(const std::string& path, const NamedTensors& tensors) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("checkpoint: cannot open for write: " + tmp);
        os.write(kMagic, sizeof(kMagic));
        write_pod(os, kVersion);
        write_pod(os, static_cast<uint64_t>(tensors.items.size()));
        for (const auto& [name, t] : tensors.items) {
            write_pod(os, static_cast<uint32_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_pod(os, static_cast<uint32_t>(t.rank()));
            for (int i = 0; i < t.rank(); ++i) write_pod(os, t.dim(i));
            os.write(reinterpret_cast<const char*>(t.data()),
                     static_cast<std::streamsize>(t.numel() * sizeof(double)));
        }
        if (!os) throw DataError("checkpoint: write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw DataError("checkpoint: rename failed: " + path);
    }
}

NamedTensors read_tensor_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("checkpoint: cannot open: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw DataError("checkpoint: bad magic: " + path);
    }
    const uint32_t version = read_pod<uint32_t>(is);
    if (version != kVersion) {
        throw DataError("checkpoint: unsupported version " + std::to_string(version));
    }
    const uint64_t count = read_pod<uint64_t>(is);
    NamedTensors out;
    out.items.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        const uint32_t name_len = read_pod<uint32_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        const uint32_t rank = read_pod<uint32_t>(is);
        std::vector<int64_t> shape(rank);
        for (uint32_t d = 0; d < rank; ++d) shape[d] = read_pod<int64_t>(is);
        nn::Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!is) throw DataError("checkpoint: truncated tensor data: " + path);
        out.items.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

}  // namespace bevo
