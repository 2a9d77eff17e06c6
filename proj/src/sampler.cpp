// Copyright 2026 The iterqpe authors
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

#include "iterqpe/sampler.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <thread>

#include "iterqpe/rng.hpp"

namespace iterqpe::sampler {

using algebra::devectorize;
using algebra::kron;
using algebra::vectorize;
using channel::RimCycle;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinBranchProbability = 1e-300;
constexpr Complex kI{0.0, 1.0};

Matrix half_pi_rotation(double phi) {
  Matrix axis = std::cos(phi) * model::sigma_x() - std::sin(phi) * model::sigma_y();
  return (Matrix::Identity(2, 2) - kI * axis) / std::sqrt(2.0);
}

Vector prepared_ancilla() {
  Vector psi(2);
  psi << 1.0 / std::sqrt(2.0), -kI / std::sqrt(2.0);
  return psi;
}

void run_samples(int n, int workers, const std::function<void(int)>& body) {
  if (workers <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  workers = std::min(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(workers));
  const int block = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * block;
    const int end = std::min(n, begin + block);
    pool.emplace_back([&body, begin, end] {
      for (int i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Per-round kernel for adaptive sequences: the phase-dependent readout
// rotation is left symbolic so one expensive propagator per round index
// serves every outcome history.
class RoundKernel {
 public:
  RoundKernel(const SpectralOperator& v, const NoiseSpec& noise, double tau)
      : v_(&v), tau_(tau), dim_(v.dim) {
    if (noise.has_lindblad()) {
      mode_ = Mode::lindblad;
      build_lindblad_map(noise);
    } else if (noise.has_coherent()) {
      mode_ = Mode::coherent;
      const Matrix h = kron(model::sigma_z(), v.dense()) +
                       kron(Matrix::Identity(2, 2), noise.coherent);
      const Matrix u = algebra::expm_hermitian_propagator(h, tau);
      const Matrix g = u * kron(prepared_ancilla(), Matrix::Identity(dim_, dim_));
      g_top_ = g.topRows(dim_);
      g_bottom_ = g.bottomRows(dim_);
    } else {
      mode_ = Mode::closed;
    }
  }

  // Unnormalized conditional states (rho0', rho1') for the given phase.
  std::pair<Matrix, Matrix> branches(const Matrix& rho, double phi) const {
    switch (mode_) {
      case Mode::closed: {
        const auto kp = channel::build_rim_kraus(*v_, {tau_, phi});
        return {kp.m0 * rho * kp.m0.adjoint(), kp.m1 * rho * kp.m1.adjoint()};
      }
      case Mode::coherent: {
        const Matrix r = half_pi_rotation(phi);
        const Matrix k0 = r(0, 0) * g_top_ + r(0, 1) * g_bottom_;
        const Matrix k1 = r(1, 0) * g_top_ + r(1, 1) * g_bottom_;
        return {k0 * rho * k0.adjoint(), k1 * rho * k1.adjoint()};
      }
      case Mode::lindblad: {
        const Matrix evolved = devectorize(evolved_map_ * vectorize(rho));
        const Matrix r = kron(half_pi_rotation(phi), Matrix::Identity(dim_, dim_));
        const Matrix rotated = r * evolved * r.adjoint();
        return {rotated.topLeftCorner(dim_, dim_), rotated.bottomRightCorner(dim_, dim_)};
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  enum class Mode { closed, coherent, lindblad };

  void build_lindblad_map(const NoiseSpec& noise) {
    const Eigen::Index d = dim_;
    const Eigen::Index dc = 2 * d;
    const Matrix idc = Matrix::Identity(dc, dc);
    Matrix h = kron(model::sigma_z(), v_->dense());
    if (noise.has_coherent()) h += kron(Matrix::Identity(2, 2), noise.coherent);
    Matrix liouville = -kI * (kron(h, idc) - kron(idc, h.transpose()));
    for (const auto& [jump, rate] : noise.lindblad) {
      const Matrix l = kron(Matrix::Identity(2, 2), jump);
      const Matrix ldl = l.adjoint() * l;
      liouville += rate * (kron(l, l.conjugate()) -
                           0.5 * (kron(ldl, idc) + kron(idc, ldl.transpose())));
    }
    const Matrix propagator = algebra::expm_general(liouville * tau_);
    const Vector psi = prepared_ancilla();
    const Matrix rho_q = psi * psi.adjoint();
    evolved_map_.resize(4 * d * d, d * d);
    Matrix basis = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        basis(i, j) = 1.0;
        evolved_map_.col(i * d + j) = propagator * vectorize(kron(rho_q, basis));
        basis(i, j) = 0.0;
      }
  }

  const SpectralOperator* v_;
  double tau_;
  Eigen::Index dim_;
  Mode mode_ = Mode::closed;
  Matrix g_top_, g_bottom_; // coherent
  Matrix evolved_map_;      // lindblad
};

} // namespace

InitialState InitialState::custom(Matrix rho) {
  if (rho.rows() != rho.cols()) throw std::invalid_argument("initial state: non-square density");
  if ((rho - rho.adjoint()).norm() > 1e-10 * std::max(rho.norm(), 1e-300))
    throw std::invalid_argument("initial state: density not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-10)
    throw std::invalid_argument("initial state: density trace differs from 1");
  const auto eig = algebra::eig_hermitian(rho);
  if (eig.values.minCoeff() < -1e-10)
    throw std::invalid_argument("initial state: density not positive semidefinite");
  return {Kind::custom, std::move(rho)};
}

Matrix InitialState::realize(const SpectralOperator& v) const {
  switch (kind) {
    case Kind::maximally_mixed:
      return Matrix::Identity(v.dim, v.dim) / double(v.dim);
    case Kind::custom:
      if (density.rows() != v.dim) throw std::invalid_argument("initial state: dimension mismatch");
      return density;
    case Kind::equal_superposition: {
      Vector psi = Vector::Zero(v.dim);
      for (const auto& p : v.projectors) {
        const auto eig = algebra::eig_hermitian(p);
        for (Eigen::Index c = 0; c < eig.values.size(); ++c)
          if (eig.values(c) > 0.5) {
            psi += eig.vectors.col(c);
            break; // one representative per eigenspace, first by index
          }
      }
      psi /= psi.norm();
      return psi * psi.adjoint();
    }
  }
  throw std::logic_error("unreachable");
}

std::tuple<int, Matrix, double> rim_cycle_update(const Matrix& rho, const KrausPair& kp, double u) {
  const Matrix branch0 = kp.m0 * rho * kp.m0.adjoint();
  const double p0 = branch0.trace().real();
  const int outcome = u < p0 ? 0 : 1;
  Matrix next = outcome == 0 ? branch0 : Matrix(kp.m1 * rho * kp.m1.adjoint());
  const double pa = outcome == 0 ? p0 : next.trace().real();
  if (pa < kMinBranchProbability)
    throw std::runtime_error("rim_cycle_update: trajectory probability underflow");
  next /= next.trace().real();
  return {outcome, std::move(next), pa};
}

double AdaptivePlan::tau(int round) const {
  if (round < 1 || round > rounds) throw std::invalid_argument("adaptive plan: round out of range");
  return std::ldexp(kPi / scale, rounds - round);
}

double AdaptivePlan::phase(const std::vector<std::uint8_t>& history) const {
  const int i = int(history.size()) + 1;
  double frac = 0.0;
  for (int j = 0; j < i - 1; ++j)
    if (history[std::size_t(j)]) frac += std::ldexp(1.0, -(i - j));
  return kPi - 2.0 * kPi * frac;
}

double AdaptivePlan::statistic(const std::vector<std::uint8_t>& bits) const {
  double a = 0.0;
  for (int i = 1; i <= int(bits.size()); ++i)
    if (bits[std::size_t(i - 1)]) a += std::ldexp(1.0, i - int(bits.size()) - 1);
  return a;
}

double AdaptivePlan::total_time() const { return (std::ldexp(1.0, rounds) - 1.0) * kPi / scale; }

void AdaptivePlan::validate(const SpectralOperator& v) const {
  if (rounds < 1) throw std::invalid_argument("adaptive plan: rounds must be >= 1");
  if (scale < v.operator_norm() * (1.0 - 1e-12))
    throw std::invalid_argument("adaptive plan: scale below the operator norm bound");
}

SampleBatch sample_repetitive(const SpectralOperator& v, const NoiseSpec& noise,
                              const RimSettings& s, int m, int n_samples,
                              const InitialState& init, std::uint64_t seed,
                              const SamplerOptions& opt) {
  if (m < 1) throw std::invalid_argument("sample_repetitive: m must be >= 1");
  const RimCycle cycle = RimCycle::for_noise(v, noise, s);
  const Matrix rho0 = init.realize(v);

  SampleBatch batch;
  batch.scheme = Scheme::repetitive;
  batch.seed = seed;
  batch.fingerprint = opt.fingerprint;
  batch.records.resize(std::size_t(std::max(n_samples, 0)));

  run_samples(n_samples, opt.workers, [&](int idx) {
    CounterRng rng(seed, std::uint64_t(idx));
    Matrix rho = rho0;
    auto& rec = batch.records[std::size_t(idx)];
    rec.bits.resize(std::size_t(m));
    int zeros = 0;
    double logp = 0.0;
    for (int i = 0; i < m; ++i) {
      const double p0 = cycle.outcome0_probability(rho);
      const int a = rng.uniform() < p0 ? 0 : 1;
      Matrix next = cycle.apply(rho, a);
      const double pa = next.trace().real();
      if (pa < kMinBranchProbability)
        throw std::runtime_error("sample_repetitive: trajectory probability underflow");
      rho = next / pa;
      logp += std::log(pa);
      rec.bits[std::size_t(i)] = std::uint8_t(a);
      zeros += 1 - a;
    }
    rec.statistic = double(zeros) / double(m);
    rec.log_probability = logp;
    if (opt.keep_final_state) rec.final_state = rho;
  });
  return batch;
}

SampleBatch sample_adaptive(const SpectralOperator& v, const NoiseSpec& noise,
                            const AdaptivePlan& plan, int n_samples, const InitialState& init,
                            std::uint64_t seed, const SamplerOptions& opt) {
  plan.validate(v);
  std::vector<RoundKernel> kernels;
  kernels.reserve(std::size_t(plan.rounds));
  for (int i = 1; i <= plan.rounds; ++i) kernels.emplace_back(v, noise, plan.tau(i));
  const Matrix rho0 = init.realize(v);

  SampleBatch batch;
  batch.scheme = Scheme::adaptive;
  batch.seed = seed;
  batch.fingerprint = opt.fingerprint;
  batch.records.resize(std::size_t(std::max(n_samples, 0)));

  run_samples(n_samples, opt.workers, [&](int idx) {
    CounterRng rng(seed, std::uint64_t(idx));
    Matrix rho = rho0;
    auto& rec = batch.records[std::size_t(idx)];
    rec.bits.reserve(std::size_t(plan.rounds));
    double logp = 0.0;
    for (int i = 1; i <= plan.rounds; ++i) {
      const double phi = plan.phase(rec.bits);
      auto [b0, b1] = kernels[std::size_t(i - 1)].branches(rho, phi);
      const double p0 = b0.trace().real();
      const int a = rng.uniform() < p0 ? 0 : 1;
      Matrix next = a == 0 ? std::move(b0) : std::move(b1);
      const double pa = next.trace().real();
      if (pa < kMinBranchProbability)
        throw std::runtime_error("sample_adaptive: trajectory probability underflow");
      rho = next / pa;
      logp += std::log(pa);
      rec.bits.push_back(std::uint8_t(a));
    }
    rec.statistic = plan.statistic(rec.bits);
    rec.log_probability = logp;
    if (opt.keep_final_state) rec.final_state = rho;
  });
  return batch;
}

namespace {

void enumerate_recursive(const std::vector<RoundKernel>& kernels, const AdaptivePlan* plan,
                         const RimCycle* cycle, std::vector<std::uint8_t>& bits, const Matrix& rho,
                         int depth, int m, const std::function<void(const std::vector<std::uint8_t>&, double)>& sink) {
  if (depth == m) {
    sink(bits, rho.trace().real());
    return;
  }
  if (cycle != nullptr) {
    for (int a : {0, 1}) {
      bits.push_back(std::uint8_t(a));
      enumerate_recursive(kernels, plan, cycle, bits, cycle->apply(rho, a), depth + 1, m, sink);
      bits.pop_back();
    }
  } else {
    const double phi = plan->phase(bits);
    auto [b0, b1] = kernels[std::size_t(depth)].branches(rho, phi);
    bits.push_back(0);
    enumerate_recursive(kernels, plan, cycle, bits, b0, depth + 1, m, sink);
    bits.back() = 1;
    enumerate_recursive(kernels, plan, cycle, bits, b1, depth + 1, m, sink);
    bits.pop_back();
  }
}

constexpr int kMaxEnumerationRounds = 12;

} // namespace

DistributionTable enumerate_repetitive(const SpectralOperator& v, const NoiseSpec& noise,
                                       const RimSettings& s, int m, const InitialState& init) {
  if (m < 1 || m > kMaxEnumerationRounds)
    throw std::invalid_argument("enumerate_repetitive: m outside enumerable range");
  const RimCycle cycle = RimCycle::for_noise(v, noise, s);
  DistributionTable table;
  table.grid.resize(std::size_t(m) + 1);
  table.probabilities.assign(std::size_t(m) + 1, 0.0);
  for (int j = 0; j <= m; ++j) table.grid[std::size_t(j)] = double(j) / double(m);

  std::vector<std::uint8_t> bits;
  enumerate_recursive({}, nullptr, &cycle, bits, init.realize(v), 0, m,
                      [&](const std::vector<std::uint8_t>& b, double p) {
                        int zeros = 0;
                        for (auto bit : b) zeros += 1 - bit;
                        table.probabilities[std::size_t(zeros)] += p;
                      });
  return table;
}

DistributionTable enumerate_adaptive(const SpectralOperator& v, const NoiseSpec& noise,
                                     const AdaptivePlan& plan, const InitialState& init) {
  plan.validate(v);
  if (plan.rounds > kMaxEnumerationRounds)
    throw std::invalid_argument("enumerate_adaptive: m outside enumerable range");
  std::vector<RoundKernel> kernels;
  kernels.reserve(std::size_t(plan.rounds));
  for (int i = 1; i <= plan.rounds; ++i) kernels.emplace_back(v, noise, plan.tau(i));

  const auto n = std::size_t(1) << plan.rounds;
  DistributionTable table;
  table.grid.resize(n);
  table.probabilities.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) table.grid[j] = double(j) / double(n);

  std::vector<std::uint8_t> bits;
  enumerate_recursive(kernels, &plan, nullptr, bits, init.realize(v), 0, plan.rounds,
                      [&](const std::vector<std::uint8_t>& b, double p) {
                        const double a = plan.statistic(b);
                        table.probabilities[std::size_t(std::llround(a * double(n)))] += p;
                      });
  return table;
}

OutcomeHistogram histogram(const SampleBatch& batch, int m) {
  OutcomeHistogram h;
  h.scheme = batch.scheme;
  const std::size_t bins =
      batch.scheme == Scheme::repetitive ? std::size_t(m) + 1 : std::size_t(1) << m;
  const double denom = batch.scheme == Scheme::repetitive ? double(m) : std::ldexp(1.0, m);
  h.grid.resize(bins);
  for (std::size_t j = 0; j < bins; ++j) h.grid[j] = double(j) / denom;
  h.counts.assign(bins, 0);
  for (const auto& rec : batch.records) {
    const auto idx = std::size_t(std::llround(rec.statistic * denom));
    if (idx >= bins) throw std::logic_error("histogram: statistic off grid");
    ++h.counts[idx];
  }
  h.total = std::int64_t(batch.records.size());
  return h;
}

} // namespace iterqpe::sampler
