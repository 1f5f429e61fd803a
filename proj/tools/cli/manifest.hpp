#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace corgs::cli {

/// SHA-1 of "blob <size>\0<content>", as `git hash-object` computes it.
std::string git_blob_hash(const std::filesystem::path& file);

struct HashedFile {
    std::string path;
    std::string hash;
};

/// Blob hashes of every regular file below `dir` (sorted by relative path)
/// plus one combined hash over the `path\0hash\n` listing.
struct DirectoryHash {
    std::vector<HashedFile> files;
    std::string combined;
};

DirectoryHash hash_directory(const std::filesystem::path& dir);

}  // namespace corgs::cli
