#pragma once

#include "still/core/bytes.hpp"

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace still {

// Append-only file of checksummed records:
//
//   magic bytes
//   repeated { u32 payload_len (LE) | payload | u32 crc32(payload) (LE) }
//
// A crash can leave at most one partial record at the tail. scan() stops at
// the first record that is short or fails its checksum and reports the
// truncation; open_append() cuts the file back to the last valid record.
class RecordFile {
public:
    struct Scan {
        std::vector<Bytes> records;
        std::vector<std::uint64_t> end_offsets; // file offset just past each record
        std::uint64_t valid_end = 0;
        std::uint64_t file_size = 0;
        bool truncated() const { return valid_end != file_size; }
    };

    // Fails with Errc::store_exists if the path exists.
    static RecordFile create(const std::filesystem::path& path, std::string_view magic, bool durable);
    // Throws Errc::store_corrupt on magic mismatch, Errc::io_error if unreadable.
    static Scan scan(const std::filesystem::path& path, std::string_view magic);
    // Truncates to valid_end and positions for appends.
    static RecordFile open_append(const std::filesystem::path& path, std::uint64_t valid_end, bool durable);

    RecordFile(RecordFile&& other) noexcept;
    RecordFile& operator=(RecordFile&& other) noexcept;
    RecordFile(const RecordFile&) = delete;
    RecordFile& operator=(const RecordFile&) = delete;
    ~RecordFile();

    // Writes the framed record in one write(2); returns the end offset.
    std::uint64_t append(ByteView payload);
    std::uint64_t size() const { return size_; }
    const std::filesystem::path& path() const { return path_; }

    static Bytes frame(ByteView payload);

private:
    RecordFile(std::filesystem::path path, int fd, std::uint64_t size, bool durable);
    void write_all(ByteView data);

    std::filesystem::path path_;
    int fd_ = -1;
    std::uint64_t size_ = 0;
    bool durable_ = false;
};

// Writes to a temporary sibling and renames over the target.
void write_file_atomic(const std::filesystem::path& path, ByteView data, bool durable);
Bytes read_file(const std::filesystem::path& path);

} // namespace still
