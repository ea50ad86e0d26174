#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace dkisst
{

/// Writes `content` to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out)
            throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace dkisst
