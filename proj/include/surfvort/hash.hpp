#pragma once

#include <string>
#include <string_view>

namespace surfvort {

/// Git object hash of a blob: SHA-1 over "blob <size>\0" followed by the
/// content, as lowercase hex. Matches `git hash-object`.
std::string git_blob_sha1(std::string_view content);

}  // namespace surfvort
