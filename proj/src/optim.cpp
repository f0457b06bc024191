// Copyright 2026 The VQS Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vqs/optim.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <cstring>
#include <numeric>

#include "binary_io.hpp"
#include "vqs/error.hpp"
#include "vqs/random.hpp"

namespace vqs {

std::size_t Tensor::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::size_t ParamSet::add(std::string name, std::vector<std::size_t> shape) {
  Tensor t{std::move(name), std::move(shape), {}};
  t.data.assign(t.numel(), 0.0);
  tensors_.push_back(std::move(t));
  return tensors_.size() - 1;
}

const Tensor* ParamSet::find(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const Tensor& ParamSet::at(const std::string& name) const {
  const Tensor* t = find(name);
  if (!t) fail(ErrorCode::kNotFound, "no parameter tensor '" + name + "'");
  return *t;
}

Tensor& ParamSet::at(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).at(name));
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  for (const auto& t : tensors_) out.add(t.name, t.shape);
  return out;
}

bool ParamSet::same_shape(const ParamSet& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].shape != other.tensors_[i].shape ||
        tensors_[i].data.size() != other.tensors_[i].data.size()) {
      return false;
    }
  }
  return true;
}

std::size_t ParamSet::numel() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.data.size();
  return n;
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].shape != b[i].shape ||
        a[i].data != b[i].data) {
      return false;
    }
  }
  return true;
}

AdamState AdamState::fresh(const ParamSet& params, double lr) {
  AdamState state;
  state.lr = lr;
  for (const auto& t : params.tensors()) {
    state.m.emplace_back(t.data.size(), 0.0);
    state.v.emplace_back(t.data.size(), 0.0);
  }
  return state;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state) {
  if (!params.same_shape(grads) || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    fail(ErrorCode::kShapeMismatch, "parameter, gradient and moment shapes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].data.size() ||
        state.v[i].size() != params[i].data.size()) {
      fail(ErrorCode::kShapeMismatch,
           "moment shape differs for '" + params[i].name + "'");
    }
  }
  bool any = false;
  for (const auto& g : grads.tensors()) {
    any = any || std::any_of(g.data.begin(), g.data.end(),
                             [](double x) { return x != 0.0; });
  }
  if (!any) return;

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& theta = params[i].data;
    const auto& g = grads[i].data;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      theta[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double grad_check(const LossFn& loss, const ParamSet& params, double h) {
  ParamSet analytic = params.zeros_like();
  loss(params, &analytic);
  ParamSet probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    for (std::size_t k = 0; k < probe[i].data.size(); ++k) {
      const double saved = probe[i].data[k];
      probe[i].data[k] = saved + h;
      const double up = loss(probe, nullptr);
      probe[i].data[k] = saved - h;
      const double down = loss(probe, nullptr);
      probe[i].data[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i].data[k];
      const double rel =
          std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n,
                                                   const TrainConfig& config,
                                                   std::size_t epoch) {
  if (config.batch_size < 1) {
    fail(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  }
  std::vector<std::size_t> order;
  if (config.shuffle) {
    order = seeded_permutation(
        n, config.seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(epoch) + 1));
  } else {
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < n; b += config.batch_size) {
    const std::size_t e = std::min(n, b + config.batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                         order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return batches;
}

double mean_loss(const ParamSet& params, std::size_t n_examples,
                 const BatchLossFn& loss) {
  if (n_examples == 0) return 0.0;
  std::vector<std::size_t> all(n_examples);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return loss(params, all, nullptr);
}

TrainReport fit(ParamSet& params, std::size_t n_examples,
                const TrainConfig& config, const BatchLossFn& loss) {
  TrainReport report;
  report.initial_loss = mean_loss(params, n_examples, loss);
  AdamState state = AdamState::fresh(params, config.lr);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& batch : make_batches(n_examples, config, epoch)) {
      ParamSet grad = params.zeros_like();
      total += loss(params, batch, &grad) * static_cast<double>(batch.size());
      adam_step(params, grad, state);
    }
    report.epoch_loss.push_back(n_examples ? total / static_cast<double>(n_examples)
                                           : 0.0);
  }
  report.final_loss = config.epochs == 0 ? report.initial_loss
                                         : mean_loss(params, n_examples, loss);
  return report;
}

namespace {

constexpr char kCheckpointMagic[4] = {'V', 'Q', 'S', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_tensor(detail::ByteWriter& out, const std::string& name,
                const std::vector<std::size_t>& shape, const Vec& data) {
  out.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  out.put_bytes(name.data(), name.size());
  out.put<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) out.put<std::uint64_t>(d);
  for (double v : data) out.put<float>(static_cast<float>(v));
}

Tensor get_tensor(detail::ByteReader& in) {
  Tensor t;
  const auto name_len = in.get<std::uint32_t>();
  if (name_len > in.remaining()) {
    fail(ErrorCode::kTruncatedFile, "tensor name runs past end of file");
  }
  t.name.resize(name_len);
  in.get_bytes(t.name.data(), name_len);
  const auto rank = in.get<std::uint32_t>();
  if (rank > in.remaining() / 8) {
    fail(ErrorCode::kTruncatedFile, "tensor shape runs past end of file");
  }
  for (std::uint32_t r = 0; r < rank; ++r) {
    t.shape.push_back(static_cast<std::size_t>(in.get<std::uint64_t>()));
  }
  std::size_t n = 1;
  for (auto d : t.shape) {
    if (d != 0 && n > in.remaining() / 4 / d) {
      fail(ErrorCode::kTruncatedFile, "tensor '" + t.name + "' runs past end of file");
    }
    n *= d;
  }
  t.data.resize(n);
  for (auto& v : t.data) v = in.get<float>();
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamSet& params,
                     const AdamState* adam) {
  detail::ByteWriter out;
  out.put_bytes(kCheckpointMagic, 4);
  out.put<std::uint32_t>(kCheckpointVersion);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& t : params.tensors()) put_tensor(out, t.name, t.shape, t.data);
  out.put<std::uint8_t>(adam ? 1 : 0);
  if (adam) {
    out.put<std::uint64_t>(adam->step);
    out.put<double>(adam->lr);
    out.put<double>(adam->beta1);
    out.put<double>(adam->beta2);
    out.put<double>(adam->eps);
    for (std::size_t i = 0; i < params.size(); ++i) {
      put_tensor(out, "adam.m." + params[i].name, params[i].shape, adam->m.at(i));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      put_tensor(out, "adam.v." + params[i].name, params[i].shape, adam->v.at(i));
    }
  }
  detail::write_file_bytes(path, out.buffer());
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    fail(ErrorCode::kBadMagic, path + ": not a VQSC checkpoint");
  }
  detail::ByteReader in(bytes, path);
  char magic[4];
  in.get_bytes(magic, 4);
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kUnsupportedVersion,
         path + ": checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    Tensor t = get_tensor(in);
    ckpt.params.tensors().push_back(std::move(t));
  }
  if (in.get<std::uint8_t>() != 0) {
    AdamState adam;
    adam.step = in.get<std::uint64_t>();
    adam.lr = in.get<double>();
    adam.beta1 = in.get<double>();
    adam.beta2 = in.get<double>();
    adam.eps = in.get<double>();
    for (std::uint32_t i = 0; i < n; ++i) adam.m.push_back(get_tensor(in).data);
    for (std::uint32_t i = 0; i < n; ++i) adam.v.push_back(get_tensor(in).data);
    ckpt.adam = std::move(adam);
  }
  return ckpt;
}

}  // namespace vqs
