#include "gwm/data/storage.hpp"

#include "gwm/binio.hpp"
#include "gwm/errors.hpp"

namespace gwm::data {

namespace {

constexpr char kMagic[8] = {'G', 'W', 'M', 'D', 'A', 'T', 'A', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

void write_episode(ByteWriter& w, const Episode& ep) {
    w.str(ep.scenario);
    w.str(ep.policy);
    w.u64(ep.seed);
    w.u32(static_cast<std::uint32_t>(ep.n));
    w.u32(static_cast<std::uint32_t>(ep.steps));
    w.f64_array(ep.pos.data(), ep.pos.size());
    w.f64_array(ep.vel.data(), ep.vel.size());
    w.f64_array(ep.waypoint.data(), ep.waypoint.size());
    w.f64_array(ep.energy.data(), ep.energy.size());
    w.i32_array(ep.pause.data(), ep.pause.size());
    w.i32_array(ep.cluster.data(), ep.cluster.size());
    w.u8_array(ep.ch.data(), ep.ch.size());
    w.u8_array(ep.alive.data(), ep.alive.size());
    w.u8_array(ep.action.data(), ep.action.size());
    w.f64_array(ep.reward.data(), ep.reward.size());
    w.u8_array(ep.cont.data(), ep.cont.size());
}

Episode read_episode(ByteReader& r) {
    Episode ep;
    ep.scenario = r.str();
    ep.policy = r.str();
    ep.seed = r.u64();
    ep.n = static_cast<std::int32_t>(r.u32());
    ep.steps = static_cast<std::int32_t>(r.u32());
    if (ep.n <= 0 || ep.steps < 0) {
        throw ChecksumError("dataset: corrupt episode dimensions");
    }
    std::size_t frames = static_cast<std::size_t>(ep.steps) + 1;
    std::size_t fn = frames * ep.n;
    std::size_t tn = static_cast<std::size_t>(ep.steps) * ep.n;
    ep.pos.resize(fn * 2);
    ep.vel.resize(fn * 2);
    ep.waypoint.resize(fn * 2);
    ep.energy.resize(fn);
    ep.pause.resize(fn);
    ep.cluster.resize(fn);
    ep.ch.resize(fn);
    ep.alive.resize(fn);
    ep.action.resize(tn);
    ep.reward.resize(ep.steps);
    ep.cont.resize(ep.steps);
    r.f64_array(ep.pos.data(), ep.pos.size());
    r.f64_array(ep.vel.data(), ep.vel.size());
    r.f64_array(ep.waypoint.data(), ep.waypoint.size());
    r.f64_array(ep.energy.data(), ep.energy.size());
    r.i32_array(ep.pause.data(), ep.pause.size());
    r.i32_array(ep.cluster.data(), ep.cluster.size());
    r.u8_array(ep.ch.data(), ep.ch.size());
    r.u8_array(ep.alive.data(), ep.alive.size());
    r.u8_array(ep.action.data(), ep.action.size());
    r.f64_array(ep.reward.data(), ep.reward.size());
    r.u8_array(ep.cont.data(), ep.cont.size());
    return ep;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
    ByteWriter w;
    w.bytes(kMagic, sizeof(kMagic));
    w.u32(kFormatVersion);
    ByteWriter payload;
    payload.u32(static_cast<std::uint32_t>(ds.schema));
    payload.u32(static_cast<std::uint32_t>(ds.n));
    payload.u64(ds.seed_base);
    payload.u32(static_cast<std::uint32_t>(ds.episodes.size()));
    for (const auto& ep : ds.episodes) write_episode(payload, ep);
    w.bytes(payload.data().data(), payload.size());
    w.u32(crc32(payload.data().data(), payload.size()));
    write_file_atomic(path, w.data().data(), w.size());
}

Dataset load_dataset(const std::string& path) {
    auto bytes = read_file_bytes(path);
    ByteReader r(bytes.data(), bytes.size(), path);
    char magic[8];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError(path + ": not a dataset file");
    }
    std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
        throw VersionMismatchError(path + ": dataset format version " +
                                   std::to_string(version) + ", expected " +
                                   std::to_string(kFormatVersion));
    }
    if (r.remaining() < 4) throw TruncatedFileError(path + ": missing checksum");
    std::size_t payload_size = r.remaining() - 4;
    const std::uint8_t* payload = bytes.data() + r.offset();
    std::uint32_t want_crc = 0;
    {
        ByteReader tail(payload + payload_size, 4, path);
        want_crc = tail.u32();
    }
    if (crc32(payload, payload_size) != want_crc) {
        throw ChecksumError(path + ": checksum mismatch");
    }

    ByteReader body(payload, payload_size, path);
    Dataset ds;
    ds.schema = static_cast<std::int32_t>(body.u32());
    if (ds.schema != 1) {
        throw VersionMismatchError(path + ": dataset schema " + std::to_string(ds.schema));
    }
    ds.n = static_cast<std::int32_t>(body.u32());
    ds.seed_base = body.u64();
    std::uint32_t count = body.u32();
    ds.episodes.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) ds.episodes.push_back(read_episode(body));
    if (body.remaining() != 0) {
        throw ChecksumError(path + ": trailing bytes after last episode");
    }
    return ds;
}

}  // namespace gwm::data
