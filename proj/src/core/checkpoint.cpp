#include "core/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "core/errors.hpp"

namespace pcrec {

namespace {

constexpr const char* kMagic = "pcrec-checkpoint v1";

std::string blob_path_for(const std::string& manifest_path) {
  std::string base = manifest_path;
  const std::string suffix = ".manifest";
  if (base.size() > suffix.size() &&
      base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    base.resize(base.size() - suffix.size());
  }
  return base + ".bin";
}

uint32_t to_le(uint32_t bits) {
  if constexpr (std::endian::native == std::endian::little) {
    return bits;
  } else {
    return ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) |
           ((bits >> 8) & 0xff00u) | (bits >> 24);
  }
}

}  // namespace

void save_checkpoint(const std::string& manifest_path, const ParamSet<float>& params,
                     const std::map<std::string, std::string>& meta) {
  const std::string blob_path = blob_path_for(manifest_path);
  std::ofstream mf(manifest_path, std::ios::trunc);
  if (!mf) io_error("cannot write checkpoint manifest '" + manifest_path + "'");
  mf << kMagic << '\n';
  for (const auto& [k, v] : meta) {
    mf << "meta " << k << ' ' << v << '\n';
  }

  std::ofstream bf(blob_path, std::ios::trunc | std::ios::binary);
  if (!bf) io_error("cannot write checkpoint blob '" + blob_path + "'");

  uint64_t offset = 0;
  params.for_each_tensor([&](const LayerGroup<float>& g, TensorKind kind,
                             std::span<const float> t) {
    int rows = 1;
    int cols = static_cast<int>(t.size());
    if (kind == TensorKind::Weights) {
      rows = g.weights.rows;
      cols = g.weights.cols;
    }
    mf << "tensor " << g.name << ' ' << role_name(g.role) << ' '
       << tensor_kind_name(kind) << ' ' << rows << ' ' << cols << ' ' << offset
       << ' ' << t.size() << '\n';
    std::vector<uint32_t> le(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
      uint32_t bits;
      std::memcpy(&bits, &t[i], sizeof(bits));
      le[i] = to_le(bits);
    }
    bf.write(reinterpret_cast<const char*>(le.data()),
             static_cast<std::streamsize>(le.size() * sizeof(uint32_t)));
    offset += t.size() * sizeof(uint32_t);
  });
  mf << "blob " << std::filesystem::path(blob_path).filename().string() << ' '
     << offset << '\n';
  if (!mf || !bf) io_error("short write while saving checkpoint '" + manifest_path + "'");
}

ParamSet<float> load_checkpoint(const std::string& manifest_path,
                                std::map<std::string, std::string>* meta_out) {
  std::ifstream mf(manifest_path);
  if (!mf) io_error("cannot open checkpoint manifest '" + manifest_path + "'");
  std::string line;
  if (!std::getline(mf, line) || line != kMagic) {
    io_error("'" + manifest_path + "' is not a checkpoint manifest");
  }

  struct TensorDesc {
    std::string name;
    LayerRole role;
    TensorKind kind;
    int rows, cols;
    uint64_t offset;
    uint64_t count;
  };
  std::vector<TensorDesc> tensors;
  std::string blob_name;
  uint64_t blob_bytes = 0;

  while (std::getline(mf, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "meta") {
      std::string key;
      ss >> key;
      std::string value;
      std::getline(ss, value);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      if (meta_out) (*meta_out)[key] = value;
    } else if (tag == "tensor") {
      TensorDesc d;
      std::string role, kind;
      ss >> d.name >> role >> kind >> d.rows >> d.cols >> d.offset >> d.count;
      if (!ss) io_error("malformed tensor line in '" + manifest_path + "'");
      d.role = role_from_name(role);
      d.kind = tensor_kind_from_name(kind);
      tensors.push_back(std::move(d));
    } else if (tag == "blob") {
      ss >> blob_name >> blob_bytes;
    } else {
      io_error("unknown manifest line '" + line + "' in '" + manifest_path + "'");
    }
  }

  const std::string blob_path =
      (std::filesystem::path(manifest_path).parent_path() / blob_name).string();
  std::ifstream bf(blob_path, std::ios::binary);
  if (!bf) io_error("cannot open checkpoint blob '" + blob_path + "'");

  ParamSet<float> out;
  for (const auto& d : tensors) {
    if (out.index_of(d.name) < 0) {
      LayerGroup<float> g;
      g.name = d.name;
      g.role = d.role;
      out.groups.push_back(std::move(g));
    }
    auto& g = out.group(d.name);
    std::vector<uint32_t> le(d.count);
    bf.seekg(static_cast<std::streamoff>(d.offset));
    bf.read(reinterpret_cast<char*>(le.data()),
            static_cast<std::streamsize>(d.count * sizeof(uint32_t)));
    if (!bf) io_error("short read from checkpoint blob '" + blob_path + "'");
    std::vector<float> vals(d.count);
    for (size_t i = 0; i < le.size(); ++i) {
      const uint32_t bits = to_le(le[i]);
      std::memcpy(&vals[i], &bits, sizeof(float));
    }
    switch (d.kind) {
      case TensorKind::Weights: {
        Mat<float> w(d.rows, d.cols);
        w.a = std::move(vals);
        if (w.a.size() != static_cast<size_t>(d.rows) * static_cast<size_t>(d.cols)) {
          io_error("tensor shape disagrees with element count in '" + manifest_path + "'");
        }
        g.weights = std::move(w);
        break;
      }
      case TensorKind::Bias: g.bias = std::move(vals); break;
      case TensorKind::NormGain: g.norm_gain = std::move(vals); break;
      case TensorKind::NormShift: g.norm_shift = std::move(vals); break;
    }
  }
  return out;
}

}  // namespace pcrec
