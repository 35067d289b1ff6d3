#include "imagetalk/store.hpp"

#include "imagetalk/digest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace imagetalk {

namespace {

bool safe_name(std::string_view s) {
    if (s.empty() || s == "." || s == "..") return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
               c == '_' || c == '.';
    });
}

} // namespace

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::io, "error while reading " + path.string());
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorCode::io, "error while writing " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::io, "cannot replace " + path.string() + ": " + ec.message());
}

SessionStore::SessionStore(fs::path dir, bool create) : dir_(std::move(dir)) {
    std::error_code ec;
    if (create) fs::create_directories(dir_, ec);
    if (!fs::is_directory(dir_, ec)) throw Error(ErrorCode::io, "session store unavailable: " + dir_.string());
}

fs::path SessionStore::session_path(std::string_view id) const {
    if (!safe_name(id)) throw Error(ErrorCode::invalid_argument, "invalid session id", "id");
    return dir_ / (std::string(id) + ".json");
}

std::string SessionStore::save(const Session& session) const {
    validate(session);
    write_file_atomic(session_path(session.id), serialize_session(session));
    return session.id;
}

Session SessionStore::load(std::string_view id) const {
    if (!safe_name(id)) throw Error(ErrorCode::not_found, "no session " + std::string(id));
    const auto path = session_path(id);
    if (!fs::exists(path)) throw Error(ErrorCode::not_found, "no session " + std::string(id));
    return parse_session(read_file(path));
}

bool SessionStore::contains(std::string_view id) const {
    return safe_name(id) && fs::exists(session_path(id));
}

std::vector<std::string> SessionStore::list() const {
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(dir_)) {
        if (e.is_regular_file() && e.path().extension() == ".json") ids.push_back(e.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

ImageAsset SessionStore::put_image(std::string_view payload, std::string source_name, std::string ext) const {
    if (!ext.empty() && ext.front() == '.') ext.erase(0, 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext.empty()) ext = "bin";
    if (!safe_name(ext)) throw Error(ErrorCode::invalid_argument, "invalid image format", "format");
    ImageAsset asset;
    asset.source_name = std::move(source_name);
    asset.content_hash = sha256_hex(payload);
    asset.bytes_ref = asset.content_hash + "." + ext;
    const auto path = dir_ / asset.bytes_ref;
    if (!fs::exists(path)) write_file_atomic(path, payload);
    return asset;
}

std::string SessionStore::read_image(const ImageAsset& image) const {
    if (!safe_name(image.bytes_ref)) throw Error(ErrorCode::io, "unreadable image " + image.id);
    return read_file(dir_ / image.bytes_ref);
}

Session load_session_file(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorCode::not_found, "session file not found: " + path.string());
    return parse_session(read_file(path));
}

void save_session_file(const Session& session, const fs::path& path) {
    validate(session);
    write_file_atomic(path, serialize_session(session));
}

} // namespace imagetalk
