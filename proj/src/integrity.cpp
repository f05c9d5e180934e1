#include "dft/integrity.hpp"

#include "dft/clock.hpp"
#include "dft/error.hpp"
#include "dft/sha256.hpp"
#include "dft/text.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace dft {

namespace {

constexpr std::size_t read_block = 1 << 20;

class ReadOnlyFile {
public:
    explicit ReadOnlyFile(const fs::path& path) : fd_(::open(path.c_str(), O_RDONLY | O_CLOEXEC))
    {
        if (fd_ < 0)
            throw Error("integrity.ReadFailure", "cannot open " + path.string() + ": " + std::strerror(errno));
    }
    ~ReadOnlyFile()
    {
        if (fd_ >= 0)
            ::close(fd_);
    }
    ReadOnlyFile(const ReadOnlyFile&) = delete;
    ReadOnlyFile& operator=(const ReadOnlyFile&) = delete;

    std::size_t pread_full(std::span<std::byte> out, std::uint64_t offset, const fs::path& path) const
    {
        std::size_t done = 0;
        while (done < out.size()) {
            const ssize_t n = ::pread(fd_, out.data() + done, out.size() - done,
                                      static_cast<off_t>(offset + done));
            if (n < 0) {
                if (errno == EINTR)
                    continue;
                throw Error("integrity.ReadFailure",
                            "read failed at " + path.string() + "@" + std::to_string(offset + done));
            }
            if (n == 0)
                break;
            done += static_cast<std::size_t>(n);
        }
        return done;
    }

private:
    int fd_;
};

struct FileStamp {
    std::uint64_t size;
    std::int64_t mtime_ns;
};

FileStamp stamp_of(const fs::path& path)
{
    struct stat st{};
    if (::stat(path.c_str(), &st) != 0)
        throw Error("integrity.IntegrityViolation", "evidence file vanished: " + path.string());
    return {static_cast<std::uint64_t>(st.st_size),
            static_cast<std::int64_t>(st.st_mtim.tv_sec) * 1'000'000'000 + st.st_mtim.tv_nsec};
}

SourceFile make_source_file(const fs::path& abs, std::string rel)
{
    const auto st = stamp_of(abs);
    return {std::move(rel), abs, st.size, st.mtime_ns};
}

std::string range_label(std::uint64_t first, std::uint64_t last)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "range:%020llu-%020llu", static_cast<unsigned long long>(first),
                  static_cast<unsigned long long>(last));
    return buf;
}

std::string hash_range(const EvidenceHandle& h, const SourceFile& f, std::uint64_t offset, std::uint64_t length)
{
    Sha256 sha;
    std::vector<std::byte> buf(static_cast<std::size_t>(std::min<std::uint64_t>(read_block, std::max<std::uint64_t>(length, 1))));
    std::uint64_t done = 0;
    while (done < length) {
        const auto want = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), length - done));
        const auto got = h.read_at(f, offset + done, std::span(buf.data(), want));
        if (got != want)
            throw Error("integrity.ReadFailure", "short read at " + f.abs_path.string() + "@" +
                                                     std::to_string(offset + done + got));
        sha.update(std::span<const std::byte>(buf.data(), got));
        done += got;
    }
    return sha.hex_digest();
}

std::size_t count_records(std::string_view content)
{
    std::size_t n = 0;
    for (auto line : text::lines(content)) {
        line = text::trim(line);
        if (!line.empty() && line.front() != '#')
            ++n;
    }
    return n;
}

} // namespace

std::string_view to_string(SourceKind kind)
{
    switch (kind) {
    case SourceKind::raw_image: return "raw_image";
    case SourceKind::directory_tree: return "directory_tree";
    case SourceKind::artifact_records: return "artifact_records";
    }
    return "unknown";
}

SourceKind parse_source_kind(std::string_view text)
{
    if (text == "raw_image" || text == "raw" || text == "image")
        return SourceKind::raw_image;
    if (text == "directory_tree" || text == "tree")
        return SourceKind::directory_tree;
    if (text == "artifact_records" || text == "records")
        return SourceKind::artifact_records;
    throw Error("integrity.UnknownSourceKind", "unknown source kind: " + std::string(text));
}

struct EvidenceHandle::State {
    std::string source_id;
    SourceKind kind;
    std::uint64_t length = 0;
    std::string opened_at;
    fs::path root;
    std::vector<SourceFile> files;
};

const std::string& EvidenceHandle::source_id() const { return state_->source_id; }
SourceKind EvidenceHandle::kind() const { return state_->kind; }
std::uint64_t EvidenceHandle::length() const { return state_->length; }
const std::string& EvidenceHandle::opened_at() const { return state_->opened_at; }
const fs::path& EvidenceHandle::root() const { return state_->root; }
const std::vector<SourceFile>& EvidenceHandle::files() const { return state_->files; }

std::size_t EvidenceHandle::read_at(const SourceFile& file, std::uint64_t offset, std::span<std::byte> out) const
{
    if (out.empty() || offset >= file.size)
        return 0;
    const auto want = static_cast<std::size_t>(std::min<std::uint64_t>(out.size(), file.size - offset));
    ReadOnlyFile f(file.abs_path);
    return f.pread_full(out.first(want), offset, file.abs_path);
}

std::string EvidenceHandle::read_all(const SourceFile& file) const
{
    std::string out(static_cast<std::size_t>(file.size), '\0');
    const auto got = read_at(file, 0, std::as_writable_bytes(std::span(out.data(), out.size())));
    out.resize(got);
    return out;
}

void EvidenceHandle::check_unchanged() const
{
    for (const auto& f : state_->files) {
        const auto now = stamp_of(f.abs_path);
        if (now.size != f.size || now.mtime_ns != f.mtime_ns)
            throw Error("integrity.IntegrityViolation", "evidence modified while open: " + f.abs_path.string());
    }
}

EvidenceHandle open_evidence(const fs::path& path, SourceKind kind)
{
    std::error_code ec;
    const auto status = fs::status(path, ec);
    if (ec || !fs::exists(status))
        throw Error("integrity.NotFound", "evidence not found: " + path.string());
    if (::access(path.c_str(), R_OK) != 0)
        throw Error("integrity.NotReadable", "evidence not readable: " + path.string());

    auto state = std::make_shared<EvidenceHandle::State>();
    state->kind = kind;
    state->root = fs::canonical(path);
    state->source_id = state->root.string();
    state->opened_at = utc_now();

    switch (kind) {
    case SourceKind::raw_image:
    case SourceKind::artifact_records: {
        if (!fs::is_regular_file(status))
            throw Error("integrity.NotReadable", "expected a regular file: " + path.string());
        state->files.push_back(make_source_file(state->root, kind == SourceKind::raw_image
                                                                 ? std::string{}
                                                                 : state->root.filename().string()));
        if (kind == SourceKind::raw_image) {
            state->length = state->files.front().size;
        } else {
            EvidenceHandle tmp;
            tmp.state_ = state;
            state->length = count_records(tmp.read_all(state->files.front()));
        }
        break;
    }
    case SourceKind::directory_tree: {
        if (!fs::is_directory(status))
            throw Error("integrity.NotReadable", "expected a directory: " + path.string());
        // Symlinks are not followed so the handle never reaches outside the tree.
        for (auto it = fs::recursive_directory_iterator(state->root, fs::directory_options::none, ec);
             !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
            if (it->is_symlink() || !it->is_regular_file())
                continue;
            const auto rel = fs::relative(it->path(), state->root).generic_string();
            if (::access(it->path().c_str(), R_OK) != 0)
                throw Error("integrity.NotReadable", "evidence not readable: " + it->path().string());
            state->files.push_back(make_source_file(it->path(), rel));
        }
        if (ec)
            throw Error("integrity.ReadFailure", "cannot walk " + path.string() + ": " + ec.message());
        std::sort(state->files.begin(), state->files.end(),
                  [](const SourceFile& a, const SourceFile& b) { return a.rel_path < b.rel_path; });
        state->length = state->files.size();
        break;
    }
    }

    EvidenceHandle h;
    h.state_ = std::move(state);
    return h;
}

HashManifest compute_manifest(const EvidenceHandle& handle, const ManifestOptions& options)
{
    if (options.chunk_size == 0)
        throw Error("integrity.InvalidOptions", "chunk size must be positive");

    struct Job {
        const SourceFile* file;
        std::uint64_t offset;
        std::uint64_t length;
        std::string label;
    };
    std::vector<Job> jobs;

    HashManifest m;
    if (handle.kind() == SourceKind::raw_image) {
        m.chunk_size = options.chunk_size;
        const auto& f = handle.files().front();
        for (std::uint64_t off = 0; off < f.size; off += options.chunk_size) {
            const auto len = std::min(options.chunk_size, f.size - off);
            jobs.push_back({&f, off, len, range_label(off, off + len - 1)});
        }
        jobs.push_back({&f, 0, f.size, "image"});
    } else {
        for (const auto& f : handle.files())
            jobs.push_back({&f, 0, f.size, f.rel_path});
    }

    std::vector<std::string> digests(jobs.size());
    const auto n = static_cast<long>(jobs.size());
    if (options.execution == Execution::parallel) {
        std::optional<Error> failure;
#pragma omp parallel for schedule(dynamic, 1)
        for (long i = 0; i < n; ++i) {
            try {
                digests[i] = hash_range(handle, *jobs[i].file, jobs[i].offset, jobs[i].length);
            } catch (const Error& e) {
#pragma omp critical(dft_manifest_failure)
                if (!failure)
                    failure = e;
            }
        }
        if (failure)
            throw *failure;
    } else {
        for (long i = 0; i < n; ++i)
            digests[i] = hash_range(handle, *jobs[i].file, jobs[i].offset, jobs[i].length);
    }

    m.entries.reserve(jobs.size());
    for (std::size_t i = 0; i < jobs.size(); ++i)
        m.entries.push_back({std::move(digests[i]), std::move(jobs[i].label)});
    std::sort(m.entries.begin(), m.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.label < b.label; });
    m.computed_at = utc_now();
    return m;
}

VerificationResult verify_manifest(const EvidenceHandle& handle, const HashManifest& manifest, Execution execution)
{
    if (manifest.algorithm != "SHA-256")
        throw Error("integrity.AlgorithmUnsupported", "unsupported manifest algorithm: " + manifest.algorithm);

    ManifestOptions opts;
    opts.execution = execution;
    if (handle.kind() == SourceKind::raw_image && manifest.chunk_size != 0)
        opts.chunk_size = manifest.chunk_size;
    const auto fresh = compute_manifest(handle, opts);

    std::map<std::string, std::string> now;
    for (const auto& e : fresh.entries)
        now.emplace(e.label, e.digest);

    VerificationResult r;
    for (const auto& e : manifest.entries) {
        const auto it = now.find(e.label);
        if (it == now.end()) {
            r.mismatches.push_back({e.label, e.digest, {}});
            continue;
        }
        if (it->second != e.digest)
            r.mismatches.push_back({e.label, e.digest, it->second});
        now.erase(it);
    }
    for (const auto& [label, digest] : now)
        r.mismatches.push_back({label, {}, digest});
    std::sort(r.mismatches.begin(), r.mismatches.end(),
              [](const ManifestMismatch& a, const ManifestMismatch& b) { return a.label < b.label; });
    return r;
}

std::string format_manifest(const HashManifest& manifest)
{
    std::ostringstream out;
    out << "# algorithm=" << manifest.algorithm << " chunk_size=" << manifest.chunk_size << '\n';
    auto entries = manifest.entries;
    std::sort(entries.begin(), entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.label < b.label; });
    for (const auto& e : entries)
        out << e.digest << '\t' << e.label << '\n';
    return out.str();
}

HashManifest parse_manifest(std::string_view content)
{
    HashManifest m;
    m.algorithm.clear();
    std::size_t lineno = 0;
    for (auto line : text::lines(content)) {
        ++lineno;
        if (line.empty())
            continue;
        if (line.front() == '#') {
            for (auto field : text::split(text::trim(line.substr(1)), ' ')) {
                const auto eq = field.find('=');
                if (eq == std::string_view::npos)
                    continue;
                const auto key = field.substr(0, eq);
                const auto value = field.substr(eq + 1);
                if (key == "algorithm")
                    m.algorithm = std::string(value);
                else if (key == "chunk_size")
                    m.chunk_size = text::parse_u64(value).value_or(0);
            }
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || tab != 64 || !text::is_hex(line.substr(0, tab)))
            throw Error("integrity.MalformedManifest", "bad manifest line " + std::to_string(lineno));
        m.entries.push_back({std::string(line.substr(0, tab)), std::string(line.substr(tab + 1))});
    }
    if (m.algorithm.empty())
        m.algorithm = "SHA-256";
    return m;
}

} // namespace dft
