// Copyright 2026 The s2snet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "s2s/s2snet.hpp"

#include <cmath>
#include <random>

#include "s2s/detail/bytes.hpp"

namespace s2s {
namespace {

constexpr char kWeightMagic[4] = {'S', '2', 'S', 'W'};
constexpr std::uint32_t kWeightVersion = 1;
constexpr char kBevMagic[4] = {'S', '2', 'S', 'B'};
constexpr std::uint32_t kBevVersion = 1;
// Upper bound on any channel count read from a file.
constexpr std::uint32_t kMaxChannels = 4096;

class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  // 53 random mantissa bits from the standardized mt19937_64 stream, so the
  // sequence is identical on every platform.
  double next(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 engine_;
};

ConvParams<float> random_conv(UniformSource& rng, int c_in, int c_out, ConvMode mode, int stride) {
  auto p = ConvParams<float>::zeros(c_in, c_out, mode, stride);
  const double bound = std::sqrt(6.0 / (kKernelVolume * c_in));
  for (auto& w : p.kernel) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        w(i, j) = static_cast<float>(rng.next(-bound, bound));
      }
    }
  }
  return p;
}

NormParams<float> random_norm(UniformSource& rng, int channels) {
  NormParams<float> n = NormParams<float>::identity(channels);
  for (int c = 0; c < channels; ++c) n.gamma[c] = static_cast<float>(rng.next(0.8, 1.2));
  for (int c = 0; c < channels; ++c) n.beta[c] = static_cast<float>(rng.next(-0.05, 0.1));
  for (int c = 0; c < channels; ++c) n.running_mean[c] = static_cast<float>(rng.next(-0.1, 0.1));
  for (int c = 0; c < channels; ++c) n.running_var[c] = static_cast<float>(rng.next(0.5, 1.5));
  return n;
}

void write_conv(detail::ByteWriter& w, const ConvParams<float>& p) {
  for (const auto& k : p.kernel) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      for (Eigen::Index j = 0; j < k.cols(); ++j) w.f32(k(i, j));
    }
  }
}

void write_norm(detail::ByteWriter& w, const NormParams<float>& n) {
  for (const auto* v : {&n.gamma, &n.beta, &n.running_mean, &n.running_var}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) w.f32((*v)[i]);
  }
}

[[noreturn]] void weight_fail(const std::string& what, std::size_t offset) {
  throw WeightFileError("weights: " + what + " (at byte " + std::to_string(offset) + ")");
}

using WeightReader = detail::ByteReader<void (*)(const std::string&, std::size_t)>;

ConvParams<float> read_conv(WeightReader& r, int c_in, int c_out, ConvMode mode, int stride) {
  auto p = ConvParams<float>::zeros(c_in, c_out, mode, stride);
  r.need(static_cast<std::size_t>(kKernelVolume) * c_in * c_out * 4, "conv kernel");
  for (auto& k : p.kernel) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      for (Eigen::Index j = 0; j < k.cols(); ++j) k(i, j) = r.f32("kernel");
    }
  }
  if (!std::all_of(p.kernel.begin(), p.kernel.end(), [](const auto& k) { return k.allFinite(); })) {
    weight_fail("non-finite kernel value", r.offset());
  }
  return p;
}

NormParams<float> read_norm(WeightReader& r, int channels) {
  NormParams<float> n = NormParams<float>::identity(channels);
  for (auto* v : {&n.gamma, &n.beta, &n.running_mean, &n.running_var}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = r.f32("norm");
    if (!v->allFinite()) weight_fail("non-finite norm value", r.offset());
  }
  if ((n.running_var < 0.0f).any()) weight_fail("negative running variance", r.offset());
  return n;
}

}  // namespace

void ChannelPlan::validate() const {
  if (input_width < 1 || final_channels < 1) throw ConfigError("channel plan: widths must be >= 1");
  for (int i = 0; i < kNumBlocks; ++i) {
    if (channels[i] < 1) throw ConfigError("channel plan: channels must be >= 1");
    if (local_strides[i] != 1 && local_strides[i] != 2) {
      throw ConfigError("channel plan: strides must be 1 or 2");
    }
    if (collective_strides[i] != 1 && collective_strides[i] != 2) {
      throw ConfigError("channel plan: strides must be 1 or 2");
    }
  }
}

ModelWeights<float> init_weights(std::uint64_t seed, const ChannelPlan& plan) {
  plan.validate();
  UniformSource rng(seed);
  ModelWeights<float> w;
  w.plan = plan;
  auto fill = [&](auto& blocks, const std::array<int, kNumBlocks>& strides) {
    int width = plan.input_width;
    for (int i = 0; i < kNumBlocks; ++i) {
      auto& b = blocks[i];
      const int c = plan.channels[i];
      b.conv = random_conv(rng, width, c, leading_conv_mode(strides[i]), strides[i]);
      b.conv_norm = random_norm(rng, c);
      b.subm1 = random_conv(rng, c, c, ConvMode::kSubmanifold, 1);
      b.norm1 = random_norm(rng, c);
      b.subm2 = random_conv(rng, c, c, ConvMode::kSubmanifold, 1);
      b.norm2 = random_norm(rng, c);
      width = c;
    }
  };
  fill(w.local_blocks, plan.local_strides);
  fill(w.collective_blocks, plan.collective_strides);
  w.final_conv = random_conv(rng, plan.channels.back(), plan.final_channels,
                             ConvMode::kSubmanifold, 1);
  w.final_norm = random_norm(rng, plan.final_channels);
  return w;
}

std::vector<std::uint8_t> serialize_weights(const ModelWeights<float>& weights) {
  weights.validate();
  const ChannelPlan& plan = weights.plan;
  detail::ByteWriter w;
  w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kWeightMagic), 4));
  w.u32(kWeightVersion);
  w.u32(static_cast<std::uint32_t>(plan.input_width));
  for (int c : plan.channels) w.u32(static_cast<std::uint32_t>(c));
  for (int s : plan.local_strides) w.u32(static_cast<std::uint32_t>(s));
  for (int s : plan.collective_strides) w.u32(static_cast<std::uint32_t>(s));
  w.u32(static_cast<std::uint32_t>(plan.final_channels));
  for (const auto* blocks : {&weights.local_blocks, &weights.collective_blocks}) {
    for (const auto& b : *blocks) {
      write_conv(w, b.conv);
      write_norm(w, b.conv_norm);
      write_conv(w, b.subm1);
      write_norm(w, b.norm1);
      write_conv(w, b.subm2);
      write_norm(w, b.norm2);
    }
  }
  write_conv(w, weights.final_conv);
  write_norm(w, weights.final_norm);
  return std::move(w).take();
}

ModelWeights<float> deserialize_weights(std::span<const std::uint8_t> bytes) {
  WeightReader r(bytes, [](const std::string& what, std::size_t off) { weight_fail(what, off); });
  r.need(4, "magic");
  if (!std::equal(bytes.begin(), bytes.begin() + 4, kWeightMagic)) weight_fail("bad magic", 0);
  r.u32("magic");
  const std::uint32_t version = r.u32("version");
  if (version != kWeightVersion) weight_fail("unsupported version " + std::to_string(version), 4);

  auto read_count = [&](const char* what) {
    const std::size_t at = r.offset();
    const std::uint32_t v = r.u32(what);
    if (v < 1 || v > kMaxChannels) weight_fail(std::string("implausible ") + what, at);
    return static_cast<int>(v);
  };
  ModelWeights<float> w;
  ChannelPlan& plan = w.plan;
  plan.input_width = read_count("input width");
  for (int& c : plan.channels) c = read_count("channel count");
  for (int& s : plan.local_strides) s = read_count("stride");
  for (int& s : plan.collective_strides) s = read_count("stride");
  plan.final_channels = read_count("final channel count");
  try {
    plan.validate();
  } catch (const ConfigError& e) {
    weight_fail(e.what(), r.offset());
  }

  auto read_stream = [&](auto& blocks, const std::array<int, kNumBlocks>& strides) {
    int width = plan.input_width;
    for (int i = 0; i < kNumBlocks; ++i) {
      auto& b = blocks[i];
      const int c = plan.channels[i];
      b.conv = read_conv(r, width, c, leading_conv_mode(strides[i]), strides[i]);
      b.conv_norm = read_norm(r, c);
      b.subm1 = read_conv(r, c, c, ConvMode::kSubmanifold, 1);
      b.norm1 = read_norm(r, c);
      b.subm2 = read_conv(r, c, c, ConvMode::kSubmanifold, 1);
      b.norm2 = read_norm(r, c);
      width = c;
    }
  };
  read_stream(w.local_blocks, plan.local_strides);
  read_stream(w.collective_blocks, plan.collective_strides);
  w.final_conv = read_conv(r, plan.channels.back(), plan.final_channels, ConvMode::kSubmanifold, 1);
  w.final_norm = read_norm(r, plan.final_channels);
  if (r.remaining() != 0) weight_fail("trailing bytes after final layer", r.offset());
  return w;
}

void save_weights(const std::string& path, const ModelWeights<float>& weights) {
  const auto bytes = serialize_weights(weights);
  detail::write_file_bytes(path, bytes);
}

ModelWeights<float> load_weights(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  return deserialize_weights(bytes);
}

void write_bev(const std::string& path, const BevFeatureMap<float>& bev) {
  detail::ByteWriter w;
  w.raw(std::span(reinterpret_cast<const std::uint8_t*>(kBevMagic), 4));
  w.u32(kBevVersion);
  w.u32(static_cast<std::uint32_t>(bev.nx));
  w.u32(static_cast<std::uint32_t>(bev.ny));
  w.u32(static_cast<std::uint32_t>(bev.channels()));
  for (Eigen::Index i = 0; i < bev.data.rows(); ++i) {
    for (Eigen::Index j = 0; j < bev.data.cols(); ++j) w.f32(bev.data(i, j));
  }
  const auto bytes = std::move(w).take();
  detail::write_file_bytes(path, bytes);
}

BevFeatureMap<float> read_bev(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  auto fail = [&](const std::string& what, std::size_t off) -> void {
    throw IoError(path + ": " + what + " at byte " + std::to_string(off));
  };
  detail::ByteReader r(std::span<const std::uint8_t>(bytes), fail);
  r.need(4, "magic");
  if (!std::equal(bytes.begin(), bytes.begin() + 4, kBevMagic)) fail("bad magic", 0);
  r.u32("magic");
  if (r.u32("version") != kBevVersion) fail("unsupported version", 4);
  BevFeatureMap<float> bev;
  bev.nx = static_cast<int>(r.u32("nx"));
  bev.ny = static_cast<int>(r.u32("ny"));
  const auto channels = static_cast<Eigen::Index>(r.u32("channels"));
  const std::size_t cells = static_cast<std::size_t>(bev.nx) * bev.ny * channels;
  if (r.remaining() != cells * 4) fail("payload size does not match header", r.offset());
  bev.data.resize(static_cast<Eigen::Index>(bev.nx) * bev.ny, channels);
  for (Eigen::Index i = 0; i < bev.data.rows(); ++i) {
    for (Eigen::Index j = 0; j < bev.data.cols(); ++j) bev.data(i, j) = r.f32("value");
  }
  return bev;
}

}  // namespace s2s
