#pragma once

#include "imagetalk/domain.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace imagetalk {

// Directory-backed persistence: one `<session id>.json` document per session,
// image payloads beside it as `<content_hash>.<ext>`.
class SessionStore {
public:
    // Creates the directory when `create` is set; otherwise it must exist.
    explicit SessionStore(std::filesystem::path dir, bool create = true);

    const std::filesystem::path& dir() const noexcept { return dir_; }

    // Validates, then writes atomically (temp file + rename). Returns the id.
    std::string save(const Session& session) const;
    // Throws not_found for an unknown id, schema for an invalid document.
    Session load(std::string_view id) const;
    bool contains(std::string_view id) const;
    std::vector<std::string> list() const;

    // Stores the payload under its content hash and returns an asset with an
    // empty id (ids are assigned by the session).
    ImageAsset put_image(std::string_view payload, std::string source_name, std::string ext) const;
    std::string read_image(const ImageAsset& image) const;

    std::filesystem::path session_path(std::string_view id) const;

private:
    std::filesystem::path dir_;
};

// Standalone session files (CLI `--session FILE`).
Session load_session_file(const std::filesystem::path& path);
void save_session_file(const Session& session, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace imagetalk
