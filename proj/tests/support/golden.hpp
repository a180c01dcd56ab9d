#pragma once
// Frozen expected outputs live in tests/golden. Running a suite with
// HETLINK_UPDATE_GOLDEN=1 rewrites them instead of comparing.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace golden {

inline std::filesystem::path path(const std::string& name) { return std::filesystem::path(HETLINK_GOLDEN_DIR) / name; }

inline bool updating() {
    const char* v = std::getenv("HETLINK_UPDATE_GOLDEN");
    return v && std::string(v) == "1";
}

/// Contents of the golden file, or the actual text after writing it in update mode.
inline std::string expect(const std::string& name, const std::string& actual) {
    if (updating()) {
        std::ofstream(path(name), std::ios::binary) << actual;
        return actual;
    }
    std::ifstream in(path(name), std::ios::binary);
    if (!in) return "<missing golden file " + name + ">";
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace golden
