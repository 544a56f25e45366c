#include "mtlre/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace mtlre {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'L', 'R', 'E', 'C', 'K', 'P'};

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

void put_f64(std::ostream& os, double v) {
    put_u64(os, std::bit_cast<std::uint64_t>(v));
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw ParseError("checkpoint " + path + ": truncated (u32)");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& is, const std::string& path) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
        throw ParseError("checkpoint " + path + ": truncated (u64)");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& is, const std::string& path) {
    return std::bit_cast<double>(get_u64(is, path));
}

}  // namespace

void save_checkpoint(const std::string& path, std::span<const Parameter* const> params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    put_u32(os, kCheckpointVersion);
    put_u64(os, params.size());
    for (const Parameter* p : params) {
        put_u32(os, static_cast<std::uint32_t>(p->name.size()));
        os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        put_u32(os, static_cast<std::uint32_t>(p->shape.rank()));
        for (Index d : p->shape.extents()) put_u64(os, static_cast<std::uint64_t>(d));
        for (Index i = 0; i < p->value.size(); ++i) put_f64(os, p->value[i]);
    }
    os.flush();
    if (!os) throw IoError("write failed for checkpoint: " + path);
}

std::vector<SavedParameter> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw ParseError("checkpoint " + path + ": bad magic");
    }
    std::uint32_t version = get_u32(is, path);
    if (version != kCheckpointVersion) {
        throw ParseError("checkpoint " + path + ": unsupported version " +
                         std::to_string(version));
    }
    std::uint64_t count = get_u64(is, path);
    std::vector<SavedParameter> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint32_t name_len = get_u32(is, path);
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) {
            throw ParseError("checkpoint " + path + ": truncated name");
        }
        std::uint32_t rank = get_u32(is, path);
        if (rank > 2) {
            throw ParseError("checkpoint " + path + ": parameter '" + name +
                             "' has rank " + std::to_string(rank));
        }
        std::vector<Index> extents;
        for (std::uint32_t d = 0; d < rank; ++d) {
            extents.push_back(static_cast<Index>(get_u64(is, path)));
        }
        Shape shape(extents);
        Vec value(shape.size());
        for (Index e = 0; e < value.size(); ++e) value[e] = get_f64(is, path);
        out.push_back(SavedParameter{std::move(name), std::move(shape), std::move(value)});
    }
    return out;
}

void load_checkpoint_into(const std::string& path, std::span<Parameter* const> params) {
    std::vector<SavedParameter> saved = load_checkpoint(path);
    std::map<std::string, SavedParameter*> by_name;
    for (SavedParameter& s : saved) {
        if (!by_name.emplace(s.name, &s).second) {
            throw ParseError("checkpoint " + path + ": duplicate parameter '" + s.name + "'");
        }
    }
    for (Parameter* p : params) {
        auto it = by_name.find(p->name);
        if (it == by_name.end()) {
            throw ValidationError("checkpoint " + path + ": missing parameter '" +
                                  p->name + "'");
        }
        if (!(it->second->shape == p->shape)) {
            throw ValidationError("checkpoint " + path + ": parameter '" + p->name +
                                  "' has shape " + it->second->shape.str() +
                                  " but the model expects " + p->shape.str());
        }
        p->value = it->second->value;
        by_name.erase(it);
    }
    if (!by_name.empty()) {
        throw ValidationError("checkpoint " + path + ": unknown parameter '" +
                              by_name.begin()->first + "' not present in the model");
    }
}

}  // namespace mtlre
