#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "meshmotion/common/kv.hpp"
#include "meshmotion/nn/tape.hpp"

namespace meshmotion::nn {

struct NamedTensor {
  std::string name;
  uint32_t rows = 0;
  uint32_t cols = 0;
  std::vector<float> data;  // row-major

  bool operator==(const NamedTensor&) const = default;
};

/// Single-file parameter container: "MMCK", version, tag, echoed config
/// entries, then named float32 tensors, all little-endian.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  std::string tag;
  kv::Document config;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(std::string_view name) const;

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

template <class T>
std::vector<NamedTensor> export_parameters(const ParameterStore<T>& store) {
  std::vector<NamedTensor> out;
  for (const auto& p : store.params()) {
    NamedTensor t;
    t.name = p->name;
    t.rows = static_cast<uint32_t>(p->value.rows());
    t.cols = static_cast<uint32_t>(p->value.cols());
    t.data.resize(static_cast<size_t>(p->value.size()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) t.data[static_cast<size_t>(i)] = static_cast<float>(p->value.data()[i]);
    out.push_back(std::move(t));
  }
  return out;
}

/// Copies tensors into a store with exactly the same names and shapes;
/// throws ConfigError on any mismatch.
template <class T>
void import_parameters(ParameterStore<T>& store, const std::vector<NamedTensor>& tensors);

}  // namespace meshmotion::nn
