#include "gwm/nn/checkpoint.hpp"

#include <cstring>

#include "gwm/binio.hpp"
#include "gwm/errors.hpp"

namespace gwm::nn {

namespace {

constexpr char kMagic[8] = {'G', 'W', 'M', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

// Verifies the envelope and returns a reader positioned at the payload.
ByteReader open_payload(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    ByteReader r(bytes.data(), bytes.size(), path);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError(path + ": not a checkpoint file");
    }
    std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw VersionMismatchError(path + ": checkpoint format version " +
                                   std::to_string(version) + ", expected " +
                                   std::to_string(kFormatVersion));
    }
    if (r.remaining() < 4) throw TruncatedFileError(path + ": missing checksum");
    std::size_t payload_size = r.remaining() - 4;
    const std::uint8_t* payload = bytes.data() + r.offset();
    ByteReader tail(payload + payload_size, 4, path);
    if (crc32(payload, payload_size) != tail.u32()) {
        throw ChecksumError(path + ": checksum mismatch");
    }
    return ByteReader(payload, payload_size, path);
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const Config& metadata, std::int64_t adam_t,
                     bool include_optimizer_state) {
    ByteWriter payload;
    payload.str(metadata.to_text());
    payload.i64(adam_t);
    payload.u8(include_optimizer_state ? 1 : 0);
    payload.u32(static_cast<std::uint32_t>(store.params().size()));
    std::vector<double> zeros;
    for (const auto& p : store.params()) {
        payload.str(p->name);
        payload.u64(p->size());
        payload.f64_array(p->value.data(), p->size());
        if (include_optimizer_state) {
            // Moments are allocated lazily on the first optimizer step; an
            // untouched tensor saves as zero moments.
            bool fresh = p->m.empty() && p->v.empty();
            if (fresh && zeros.size() < p->size()) zeros.resize(p->size(), 0.0);
            if (!fresh && (p->m.size() != p->size() || p->v.size() != p->size())) {
                throw ConfigError("checkpoint: optimizer state missing for " + p->name);
            }
            payload.f64_array(fresh ? zeros.data() : p->m.data(), p->size());
            payload.f64_array(fresh ? zeros.data() : p->v.data(), p->size());
        }
    }

    ByteWriter w;
    w.bytes(kMagic, sizeof(kMagic));
    w.u32(kFormatVersion);
    w.bytes(payload.data().data(), payload.size());
    w.u32(crc32(payload.data().data(), payload.size()));
    write_file_atomic(path, w.data().data(), w.size());
}

CheckpointInfo load_checkpoint(const std::string& path, ParamStore& store) {
    auto bytes = read_file_bytes(path);
    ByteReader body = open_payload(bytes, path);

    CheckpointInfo info;
    info.metadata = Config::parse_text(body.str(), path + " (metadata)");
    info.adam_t = body.i64();
    info.has_optimizer_state = body.u8() != 0;
    std::uint32_t count = body.u32();
    if (count != store.params().size()) {
        throw ConfigError(path + ": checkpoint holds " + std::to_string(count) +
                          " tensors, model expects " +
                          std::to_string(store.params().size()));
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = body.str();
        std::uint64_t size = body.u64();
        Param* p = store.find(name);
        if (p == nullptr) throw ConfigError(path + ": model has no tensor " + name);
        if (p->size() != size) {
            throw ConfigError(path + ": tensor " + name + " holds " +
                              std::to_string(size) + " values, model expects " +
                              std::to_string(p->size()));
        }
        body.f64_array(p->value.data(), size);
        if (info.has_optimizer_state) {
            p->m.resize(size);
            p->v.resize(size);
            body.f64_array(p->m.data(), size);
            body.f64_array(p->v.data(), size);
        }
    }
    if (body.remaining() != 0) {
        throw ChecksumError(path + ": trailing bytes after last tensor");
    }
    return info;
}

Config read_checkpoint_metadata(const std::string& path) {
    auto bytes = read_file_bytes(path);
    ByteReader body = open_payload(bytes, path);
    return Config::parse_text(body.str(), path + " (metadata)");
}

}  // namespace gwm::nn
