#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace gwm {

std::uint32_t crc32(const void* data, std::size_t size, std::uint32_t seed = 0);

// Append-only little-endian byte buffer. Build the payload in memory, stamp
// the checksum, then write atomically.
class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v);
    void bytes(const void* data, std::size_t size);
    void str(const std::string& s);

    void u8_array(const std::uint8_t* data, std::size_t count) { bytes(data, count); }
    void i32_array(const std::int32_t* data, std::size_t count);
    void f64_array(const double* data, std::size_t count);

    const std::vector<std::uint8_t>& data() const { return buf_; }
    std::size_t size() const { return buf_.size(); }

private:
    std::vector<std::uint8_t> buf_;
};

// Reader over an in-memory buffer. Reading past the end throws
// TruncatedFileError tagged with the origin name.
class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size, std::string origin)
        : data_(data), size_(size), origin_(std::move(origin)) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64();
    std::string str();
    void raw(void* out, std::size_t size);

    void u8_array(std::uint8_t* out, std::size_t count) { raw(out, count); }
    void i32_array(std::int32_t* out, std::size_t count);
    void f64_array(double* out, std::size_t count);

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return size_ - pos_; }

private:
    void need(std::size_t n);

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    std::string origin_;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

// Writes via a temp file in the same directory plus rename, so readers never
// observe a half-written file.
void write_file_atomic(const std::string& path, const void* data, std::size_t size);

}  // namespace gwm
