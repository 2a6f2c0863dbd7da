#pragma once

#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <utility>

#include "compgrid/board.hpp"

namespace compgrid::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "compgrid") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Mask mask_of(std::initializer_list<Pos> reds) {
  Mask m;
  for (Pos p : reds) m.set(p);
  return m;
}

/// Board with the given red tiles; the start is the first one listed.
inline Board board_of(std::initializer_list<Pos> reds, Provenance prov = Provenance::Null) {
  Board b;
  b.red = mask_of(reds);
  b.start = *reds.begin();
  b.provenance = prov;
  return b;
}

}  // namespace compgrid::testing
