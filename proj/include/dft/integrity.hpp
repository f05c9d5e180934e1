#pragma once

#include "dft/execution.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dft {

enum class SourceKind { raw_image, directory_tree, artifact_records };

std::string_view to_string(SourceKind kind);
SourceKind parse_source_kind(std::string_view text);

/// One readable byte stream inside an evidence source. A raw image or a
/// record file has exactly one; a directory tree has one per regular file.
struct SourceFile {
    std::string rel_path;            // '/'-separated; empty for a raw image
    std::filesystem::path abs_path;
    std::uint64_t size = 0;
    std::int64_t mtime_ns = 0;
};

/// Read-only view of one seized source. The handle exposes no way to write to
/// the underlying bytes, and every read goes through an O_RDONLY descriptor.
/// Copies share the same immutable state and may be used from any thread.
class EvidenceHandle {
public:
    const std::string& source_id() const;
    SourceKind kind() const;
    /// Bytes for a raw image; entry count for a tree or record source.
    std::uint64_t length() const;
    const std::string& opened_at() const;
    const std::filesystem::path& root() const;
    const std::vector<SourceFile>& files() const;

    /// Reads up to out.size() bytes at offset; returns the count read, which is
    /// short only at end of file.
    std::size_t read_at(const SourceFile& file, std::uint64_t offset,
                        std::span<std::byte> out) const;
    std::string read_all(const SourceFile& file) const;

    /// Throws integrity.IntegrityViolation if any file changed size or mtime
    /// since the handle was opened.
    void check_unchanged() const;

private:
    friend EvidenceHandle open_evidence(const std::filesystem::path&, SourceKind);
    struct State;
    std::shared_ptr<const State> state_;
};

EvidenceHandle open_evidence(const std::filesystem::path& path, SourceKind kind);

struct ManifestEntry {
    std::string digest; // lowercase hex
    std::string label;  // relative path, "range:<first>-<last>" or "image"

    bool operator==(const ManifestEntry&) const = default;
};

struct HashManifest {
    std::string algorithm = "SHA-256";
    std::uint64_t chunk_size = 0; // raw images only
    std::vector<ManifestEntry> entries;
    std::string computed_at;
};

struct ManifestOptions {
    std::uint64_t chunk_size = 64ull << 20;
    Execution execution = Execution::parallel;
};

HashManifest compute_manifest(const EvidenceHandle& handle, const ManifestOptions& options = {});

struct ManifestMismatch {
    std::string label;
    std::string expected; // empty when the entry is new in the source
    std::string actual;   // empty when the entry is gone from the source
};

struct VerificationResult {
    std::vector<ManifestMismatch> mismatches;
    bool ok() const { return mismatches.empty(); }
};

VerificationResult verify_manifest(const EvidenceHandle& handle, const HashManifest& manifest,
                                   Execution execution = Execution::parallel);

/// Text form: a "# algorithm=SHA-256 chunk_size=N" header, then
/// "<hex-digest>\t<label>" lines sorted by label. Timestamps are not written so
/// that identical sources give byte-identical files.
std::string format_manifest(const HashManifest& manifest);
HashManifest parse_manifest(std::string_view text);

} // namespace dft
