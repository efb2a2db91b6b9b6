#include "meshmotion/nn/checkpoint.hpp"

#include "meshmotion/binary_io.hpp"
#include "meshmotion/errors.hpp"

namespace meshmotion::nn {

const NamedTensor* Checkpoint::find(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  binary::Writer w(path);
  w.magic("MMCK");
  w.scalar<uint32_t>(kVersion);
  w.string(tag);
  w.scalar<uint32_t>(static_cast<uint32_t>(config.entries().size()));
  for (const auto& [k, v] : config.entries()) {
    w.string(k);
    w.string(v);
  }
  w.scalar<uint32_t>(static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.data.size() != static_cast<size_t>(t.rows) * t.cols)
      throw std::invalid_argument("checkpoint tensor " + t.name + ": payload size mismatch");
    w.string(t.name);
    w.scalar<uint32_t>(t.rows);
    w.scalar<uint32_t>(t.cols);
    w.floats(t.data);
  }
  w.finish();
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  binary::Reader r(path);
  r.expect_magic("MMCK");
  const auto version = r.scalar<uint32_t>();
  if (version != kVersion)
    throw IoError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.tag = r.string();
  const auto n_cfg = r.scalar<uint32_t>();
  for (uint32_t i = 0; i < n_cfg; ++i) {
    std::string k = r.string();
    std::string v = r.string();
    ck.config.set(std::move(k), std::move(v));
  }
  const auto n_tensors = r.scalar<uint32_t>();
  for (uint32_t i = 0; i < n_tensors; ++i) {
    NamedTensor t;
    t.name = r.string();
    t.rows = r.scalar<uint32_t>();
    t.cols = r.scalar<uint32_t>();
    const uint64_t count = static_cast<uint64_t>(t.rows) * t.cols;
    if (count > (1ull << 32)) throw IoError(path.string() + ": tensor " + t.name + " too large");
    t.data.resize(static_cast<size_t>(count));
    r.floats(t.data);
    ck.tensors.push_back(std::move(t));
  }
  if (!r.at_end()) throw IoError(path.string() + ": trailing bytes after checkpoint");
  return ck;
}

template <class T>
void import_parameters(ParameterStore<T>& store, const std::vector<NamedTensor>& tensors) {
  const auto& params = store.params();
  if (params.size() != tensors.size())
    throw ConfigError("checkpoint has " + std::to_string(tensors.size()) + " tensors, model expects " +
                      std::to_string(params.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    const NamedTensor& t = tensors[i];
    if (t.name != p.name || t.rows != p.value.rows() || t.cols != p.value.cols())
      throw ConfigError("checkpoint tensor '" + t.name + "' does not match parameter '" + p.name + "'");
    for (Eigen::Index k = 0; k < p.value.size(); ++k) p.value.data()[k] = static_cast<T>(t.data[static_cast<size_t>(k)]);
  }
}

template void import_parameters(ParameterStore<float>&, const std::vector<NamedTensor>&);
template void import_parameters(ParameterStore<double>&, const std::vector<NamedTensor>&);

}  // namespace meshmotion::nn
