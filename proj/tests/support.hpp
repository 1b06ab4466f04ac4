#pragma once

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "effeval/core.hpp"
#include "effeval/error.hpp"

namespace testing {

inline effeval::EmbeddingMatrix rows(std::initializer_list<std::initializer_list<double>> data) {
  std::vector<double> values;
  std::size_t dim = 0;
  for (const auto& r : data) {
    dim = r.size();
    values.insert(values.end(), r.begin(), r.end());
  }
  return effeval::EmbeddingMatrix(data.size(), dim, std::move(values));
}

inline effeval::WeightedDocument doc(std::initializer_list<std::initializer_list<double>> data,
                                     std::vector<double> weights = {}) {
  effeval::WeightedDocument d;
  d.embedding = rows(data);
  for (std::size_t i = 0; i < data.size(); ++i) d.tokens.push_back("t" + std::to_string(i));
  d.weights = weights.empty() ? std::vector<double>(data.size(), 1.0) : std::move(weights);
  return effeval::validate_document(d);
}

template <class Fn>
effeval::ErrorCode error_of(Fn&& fn) {
  try {
    fn();
  } catch (const effeval::Error& e) {
    return e.code();
  }
  return effeval::ErrorCode::kOk;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("effeval-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

}  // namespace testing

#define CHECK_ERROR(expr, code) CHECK(::testing::error_of([&] { (void)(expr); }) == (code))
