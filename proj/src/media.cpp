#include "dft/media.hpp"

#include "dft/error.hpp"
#include "dft/text.hpp"

#include <array>
#include <cstring>
#include <filesystem>
#include <map>

namespace dft {

namespace {

struct Magic {
    const char* type;
    std::size_t offset;
    std::string_view bytes;
};

using namespace std::string_view_literals;

// Order matters only where prefixes overlap (RIFF containers check the form
// type at offset 8 first).
const std::array<Magic, 10> magics = {{
    {"jpeg", 0, "\xFF\xD8\xFF"sv},
    {"png", 0, "\x89PNG"sv},
    {"gif", 0, "GIF8"sv},
    {"isobmff", 4, "ftyp"sv},
    {"avi", 8, "AVI "sv},
    {"webp", 8, "WEBP"sv},
    {"wav", 8, "WAVE"sv},
    {"mp3", 0, "ID3"sv},
    {"zip", 0, "PK\x03\x04"sv},
    {"pdf", 0, "%PDF"sv},
}};

const std::map<std::string, std::string, std::less<>>& extension_table()
{
    static const std::map<std::string, std::string, std::less<>> table = {
        {".jpg", "jpeg"}, {".jpeg", "jpeg"}, {".jpe", "jpeg"}, {".png", "png"},
        {".gif", "gif"},  {".mp4", "isobmff"}, {".m4v", "isobmff"}, {".mov", "isobmff"},
        {".3gp", "isobmff"}, {".heic", "isobmff"}, {".avi", "avi"}, {".webp", "webp"},
        {".wav", "wav"},  {".mp3", "mp3"},
    };
    return table;
}

bool riff(std::span<const std::byte> head)
{
    return head.size() >= 4 && std::memcmp(head.data(), "RIFF", 4) == 0;
}

} // namespace

std::string sniff_signature(std::span<const std::byte> head)
{
    for (const auto& m : magics) {
        if (head.size() < m.offset + m.bytes.size())
            continue;
        if ((m.offset == 8) && !riff(head))
            continue;
        if (std::memcmp(head.data() + m.offset, m.bytes.data(), m.bytes.size()) == 0)
            return m.type;
    }
    if (head.size() >= 2 && std::memcmp(head.data(), "MZ", 2) == 0)
        return "pe";
    return {};
}

std::string media_type_for_extension(std::string_view filename)
{
    const auto ext = text::to_lower(std::filesystem::path(filename).extension().string());
    const auto it = extension_table().find(ext);
    return it == extension_table().end() ? std::string{} : it->second;
}

bool is_media_type(std::string_view type)
{
    return type == "jpeg" || type == "png" || type == "gif" || type == "isobmff" || type == "avi" ||
           type == "webp" || type == "wav" || type == "mp3";
}

std::vector<ArtifactHit> inventory_media_files(const EvidenceHandle& handle)
{
    if (handle.kind() != SourceKind::directory_tree)
        throw Error("scanners.UnsupportedSource", "media inventory needs a directory tree source");

    std::vector<ArtifactHit> hits;
    std::array<std::byte, 16> head{};
    for (const auto& f : handle.files()) {
        const auto got = handle.read_at(f, 0, head);
        const auto content = sniff_signature(std::span<const std::byte>(head.data(), got));
        const auto claimed = media_type_for_extension(f.rel_path);
        const bool content_media = is_media_type(content);
        if (!content_media && claimed.empty())
            continue;

        ArtifactHit h;
        h.kind = ArtifactKind::media_file;
        h.value = f.rel_path;
        h.location = {f.rel_path, 0, Location::Unit::byte};
        h.scanner_id = "media";
        const auto ext = text::to_lower(std::filesystem::path(f.rel_path).extension().string());
        if (!claimed.empty() && claimed == content) {
            h.note = "type=" + content;
        } else {
            h.note = "type=" + (content_media ? content : claimed) + "; mismatch: extension " +
                     (ext.empty() ? std::string("(none)") : ext) + " vs content " +
                     (content.empty() ? std::string("unknown") : content);
        }
        hits.push_back(std::move(h));
    }
    handle.check_unchanged();
    return hits;
}

} // namespace dft
