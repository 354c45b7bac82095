#include "still/core/record_file.hpp"

#include "still/core/error.hpp"

#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <sys/stat.h>
#include <unistd.h>

namespace still {

namespace {

constexpr std::size_t kMaxRecord = 64u << 20;

[[noreturn]] void throw_io(const char* what)
{
    throw Error(Errc::io_error, std::string(what) + ": " + std::strerror(errno));
}

void sync_fd(int fd)
{
    if (::fdatasync(fd) != 0) throw_io("fdatasync");
}

} // namespace

RecordFile::RecordFile(std::filesystem::path path, int fd, std::uint64_t size, bool durable)
    : path_(std::move(path)), fd_(fd), size_(size), durable_(durable) {}

RecordFile::RecordFile(RecordFile&& other) noexcept
    : path_(std::move(other.path_)), fd_(other.fd_), size_(other.size_), durable_(other.durable_)
{
    other.fd_ = -1;
}

RecordFile& RecordFile::operator=(RecordFile&& other) noexcept
{
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        path_ = std::move(other.path_);
        fd_ = other.fd_;
        size_ = other.size_;
        durable_ = other.durable_;
        other.fd_ = -1;
    }
    return *this;
}

RecordFile::~RecordFile()
{
    if (fd_ >= 0) ::close(fd_);
}

RecordFile RecordFile::create(const std::filesystem::path& path, std::string_view magic, bool durable)
{
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_APPEND | O_CLOEXEC, 0600);
    if (fd < 0) {
        if (errno == EEXIST) throw Error(Errc::store_exists, "file already exists");
        throw_io("open");
    }
    RecordFile f(path, fd, 0, durable);
    f.write_all(as_bytes(magic));
    if (durable) sync_fd(fd);
    return f;
}

RecordFile::Scan RecordFile::scan(const std::filesystem::path& path, std::string_view magic)
{
    Bytes data = read_file(path);
    Scan out;
    out.file_size = data.size();
    if (data.size() < magic.size() || !std::equal(magic.begin(), magic.end(), data.begin()))
        throw Error(Errc::store_corrupt, "bad file header");
    std::size_t pos = magic.size();
    out.valid_end = pos;
    while (data.size() - pos >= 8) {
        ByteReader len_reader(ByteView(data).subspan(pos, 4));
        std::uint32_t len = len_reader.u32();
        if (len > kMaxRecord || data.size() - pos - 8 < len) break;
        ByteView payload = ByteView(data).subspan(pos + 4, len);
        ByteReader crc_reader(ByteView(data).subspan(pos + 4 + len, 4));
        if (crc_reader.u32() != crc32(payload)) break;
        out.records.emplace_back(payload.begin(), payload.end());
        pos += 8 + len;
        out.end_offsets.push_back(pos);
        out.valid_end = pos;
    }
    return out;
}

RecordFile RecordFile::open_append(const std::filesystem::path& path, std::uint64_t valid_end, bool durable)
{
    int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
    if (fd < 0) throw_io("open");
    if (::ftruncate(fd, static_cast<off_t>(valid_end)) != 0) {
        ::close(fd);
        throw_io("ftruncate");
    }
    return RecordFile(path, fd, valid_end, durable);
}

Bytes RecordFile::frame(ByteView payload)
{
    ByteWriter w;
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.raw(payload);
    w.u32(crc32(payload));
    return w.take();
}

std::uint64_t RecordFile::append(ByteView payload)
{
    if (payload.size() > kMaxRecord) throw Error(Errc::invalid_argument, "record too large");
    write_all(frame(payload));
    if (durable_) sync_fd(fd_);
    return size_;
}

void RecordFile::write_all(ByteView data)
{
    std::size_t done = 0;
    while (done < data.size()) {
        ssize_t n = ::write(fd_, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw_io("write");
        }
        done += static_cast<std::size_t>(n);
    }
    size_ += data.size();
}

void write_file_atomic(const std::filesystem::path& path, ByteView data, bool durable)
{
    auto tmp = path;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600);
    if (fd < 0) throw_io("open");
    std::size_t done = 0;
    while (done < data.size()) {
        ssize_t n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            throw_io("write");
        }
        done += static_cast<std::size_t>(n);
    }
    if (durable && ::fdatasync(fd) != 0) {
        ::close(fd);
        throw_io("fdatasync");
    }
    ::close(fd);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(Errc::io_error, "rename failed");
}

Bytes read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open file for reading");
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace still
