#pragma once

// Central-difference gradient checking for the autodiff tape.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "parkgen/autograd.hpp"
#include "parkgen/nets.hpp"
#include "parkgen/random.hpp"

namespace gradcheck {

using parkgen::ArchKind;
using parkgen::ArchSpec;
using parkgen::Rng;
using parkgen::Shape;
using parkgen::Tensor;
namespace ag = parkgen::ag;

using Fn = std::function<ag::Var<double>(const std::vector<ag::Var<double>>&)>;

inline Tensor<double> random_tensor(Shape s, Rng& rng, double scale = 1.0) {
  Tensor<double> t(s);
  for (auto& v : t.data) v = scale * rng.normal();
  return t;
}

/// Reduces a tensor output to a scalar through a fixed random projection.
inline ag::Var<double> project(const ag::Var<double>& out, std::uint64_t seed) {
  Rng rng(seed);
  return ag::mse_loss(out, ag::constant(random_tensor(out->value.shape, rng)));
}

/// Largest relative error over up to `coords` sampled coordinates per input.
/// Relative error is |a - n| / max(|a|, |n|, floor).
inline double max_relative_error(const Fn& f, const std::vector<Tensor<double>>& inputs,
                                 std::uint64_t seed, int coords = 24, double h = 1e-6,
                                 double floor = 1e-6) {
  std::vector<ag::Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(ag::parameter(t));
  const auto loss = f(vars);
  ag::backward(loss);
  Rng rng(seed);
  double worst = 0;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    const auto n = vars[k]->value.size();
    std::vector<std::size_t> idx;
    if (n <= static_cast<std::size_t>(coords)) {
      for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
    } else {
      for (int i = 0; i < coords; ++i) idx.push_back(rng.next() % n);
    }
    for (auto i : idx) {
      const double analytic = vars[k]->grad.empty() ? 0.0 : vars[k]->grad.data[i];
      auto eval = [&](double delta) {
        std::vector<ag::Var<double>> probe;
        for (std::size_t j = 0; j < vars.size(); ++j) {
          auto t = vars[j]->value;
          if (j == k) t.data[i] += delta;
          probe.push_back(ag::constant(std::move(t)));
        }
        ag::NoGradGuard guard;
        return f(probe)->value.data[0];
      };
      const double numeric = (eval(h) - eval(-h)) / (2 * h);
      const double err = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

/// Whole-network check: sampled input coordinates plus two coordinates of
/// every parameter tensor.
inline double network_grad_error(const ArchSpec& spec, Shape in, std::uint64_t seed, int coords = 6) {
  const auto w = parkgen::build<double>(spec, seed);
  Rng rng(seed + 1);
  // Jitter every parameter so zero-initialized layers still pass gradient.
  for (const auto& [_, v] : w.params())
    for (auto& p : v->value.data) p += 0.1 * rng.normal();
  const auto x = ag::parameter(random_tensor(in, rng));
  std::vector<int> steps(in.n);
  for (auto& s : steps) s = rng.uniform_int(1, 200);
  const auto* t = spec.kind == ArchKind::diffusion_unet ? &steps : nullptr;
  auto loss_of = [&](const ag::Var<double>& input) {
    return project(parkgen::forward(w, input, t), seed + 2);
  };
  ag::backward(loss_of(x));

  const double h = 1e-6;
  double worst = 0;
  auto check = [&](const ag::Var<double>& v, std::size_t i) {
    const double analytic = v->grad.empty() ? 0.0 : v->grad.data[i];
    ag::NoGradGuard guard;
    const double orig = v->value.data[i];
    v->value.data[i] = orig + h;
    const double up = loss_of(ag::constant(x->value))->value.data[0];
    v->value.data[i] = orig - h;
    const double down = loss_of(ag::constant(x->value))->value.data[0];
    v->value.data[i] = orig;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
  };
  Rng pick(seed + 3);
  for (int k = 0; k < coords; ++k) {
    // Perturbing x in place is safe: loss_of reads x->value afresh.
    check(x, pick.next() % x->value.size());
  }
  for (const auto& [name, v] : w.params())
    for (int k = 0; k < 2; ++k) check(v, pick.next() % v->value.size());
  return worst;
}

}  // namespace gradcheck
