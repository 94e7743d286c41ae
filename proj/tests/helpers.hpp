#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace testing_helpers {

/// Unique scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::mt19937_64 gen(std::random_device{}());
        path = std::filesystem::temp_directory_path() /
               ("simclust_test_" + std::to_string(gen()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace testing_helpers
