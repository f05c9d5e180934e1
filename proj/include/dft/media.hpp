#pragma once

#include "dft/hits.hpp"
#include "dft/integrity.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dft {

/// Content type named by a file's leading bytes ("jpeg", "png", "gif",
/// "isobmff", "avi", "webp", "wav", "mp3", "zip", "pdf", "pe"), or empty.
std::string sniff_signature(std::span<const std::byte> head);

/// Media type claimed by a file extension ("jpeg", "png", ...), or empty.
std::string media_type_for_extension(std::string_view filename);

bool is_media_type(std::string_view type);

/// One hit per file whose content or extension says media. The hit value is
/// the file path; the note records the detected type and any disagreement
/// between extension and content.
std::vector<ArtifactHit> inventory_media_files(const EvidenceHandle& handle);

} // namespace dft
