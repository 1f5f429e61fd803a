#include "cli/manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <memory>
#include <stdexcept>

namespace corgs::cli {

namespace fs = std::filesystem;

namespace {

std::string sha1_hex(const std::string& data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw std::runtime_error("sha1 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

}  // namespace

std::string git_blob_hash(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + file.string());
    }
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::string blob = "blob " + std::to_string(content.size());
    blob.push_back('\0');
    return sha1_hex(blob + content);
}

DirectoryHash hash_directory(const fs::path& dir) {
    DirectoryHash result;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            result.files.push_back({fs::relative(entry.path(), dir).generic_string(), git_blob_hash(entry.path())});
        }
    }
    std::sort(result.files.begin(), result.files.end(),
              [](const HashedFile& a, const HashedFile& b) { return a.path < b.path; });
    std::string listing;
    for (const auto& f : result.files) {
        listing += f.path;
        listing.push_back('\0');
        listing += f.hash + '\n';
    }
    result.combined = sha1_hex(listing);
    return result;
}

}  // namespace corgs::cli
