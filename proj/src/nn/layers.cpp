#include "dafd/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "dafd/error.hpp"

namespace dafd::nn {

Tensor conv1d_full(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 3 || w.rank() != 3 || b.rank() != 1 || w.dim(1) != x.dim(1) ||
      b.dim(0) != w.dim(0)) {
    throw NumericError("conv1d_full: shape mismatch x" + shape_string(x.shape) + " w" +
                       shape_string(w.shape) + " b" + shape_string(b.shape));
  }
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  const std::size_t out_len = len + k - 1;
  Tensor y({batch, cout, out_len});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < cout; ++c) {
      for (std::size_t t = 0; t < out_len; ++t) {
        double acc = b[c];
        // Padded index t + j maps to input index t + j - (k - 1).
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(k - 1);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
            acc += w.at(c, ci, j) * x.at(n, ci, static_cast<std::size_t>(src));
          }
        }
        y.at(n, c, t) = acc;
      }
    }
  }
  return y;
}

ConvGrads conv1d_full_backward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  const std::size_t out_len = len + k - 1;
  check_shape(dy, {batch, cout, out_len}, "conv1d_full_backward");
  ConvGrads g{Tensor(x.shape), Tensor(w.shape), Tensor({cout})};
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < cout; ++c) {
      for (std::size_t t = 0; t < out_len; ++t) {
        const double d = dy.at(n, c, t);
        g.db[c] += d;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(k - 1);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
            const auto s = static_cast<std::size_t>(src);
            g.dw.at(c, ci, j) += d * x.at(n, ci, s);
            g.dx.at(n, ci, s) += d * w.at(c, ci, j);
          }
        }
      }
    }
  }
  return g;
}

Tensor batchnorm1d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   const Tensor& running_mean, const Tensor& running_var, Mode mode,
                   BatchNormCache* cache) {
  if (x.rank() != 3) throw NumericError("batchnorm1d: expected [B, C, L] input");
  const std::size_t batch = x.dim(0), channels = x.dim(1), len = x.dim(2);
  for (const Tensor* p : {&gamma, &beta, &running_mean, &running_var}) {
    check_shape(*p, {channels}, "batchnorm1d");
  }
  Tensor y(x.shape);
  Tensor x_hat(x.shape);
  std::vector<double> inv_std(channels);
  std::vector<double> next_mean(running_mean.values);
  std::vector<double> next_var(running_var.values);
  const double count = static_cast<double>(batch * len);

  for (std::size_t c = 0; c < channels; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == Mode::kTrain) {
      for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t t = 0; t < len; ++t) mean += x.at(n, c, t);
      }
      mean /= count;
      for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t t = 0; t < len; ++t) {
          const double d = x.at(n, c, t) - mean;
          var += d * d;
        }
      }
      const double unbiased = count > 1.0 ? var / (count - 1.0) : 0.0;
      var /= count;
      next_mean[c] = (1.0 - kBatchNormMomentum) * running_mean[c] + kBatchNormMomentum * mean;
      next_var[c] = (1.0 - kBatchNormMomentum) * running_var[c] + kBatchNormMomentum * unbiased;
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    inv_std[c] = 1.0 / std::sqrt(var + kBatchNormEps);
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t t = 0; t < len; ++t) {
        const double h = (x.at(n, c, t) - mean) * inv_std[c];
        x_hat.at(n, c, t) = h;
        y.at(n, c, t) = gamma[c] * h + beta[c];
      }
    }
  }
  if (cache) {
    cache->mode = mode;
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
    cache->next_running_mean = std::move(next_mean);
    cache->next_running_var = std::move(next_var);
  }
  return y;
}

BatchNormGrads batchnorm1d_backward(const BatchNormCache& cache, const Tensor& gamma, const Tensor& dy) {
  if (cache.mode != Mode::kTrain) throw NumericError("batchnorm1d_backward: cache is not from train mode");
  const Tensor& xh = cache.x_hat;
  check_shape(dy, xh.shape, "batchnorm1d_backward");
  const std::size_t batch = xh.dim(0), channels = xh.dim(1), len = xh.dim(2);
  const double count = static_cast<double>(batch * len);
  BatchNormGrads g{Tensor(xh.shape), Tensor({channels}), Tensor({channels})};
  for (std::size_t c = 0; c < channels; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xh = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t t = 0; t < len; ++t) {
        sum_dy += dy.at(n, c, t);
        sum_dy_xh += dy.at(n, c, t) * xh.at(n, c, t);
      }
    }
    g.dbeta[c] = sum_dy;
    g.dgamma[c] = sum_dy_xh;
    const double scale = gamma[c] * cache.inv_std[c] / count;
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t t = 0; t < len; ++t) {
        g.dx.at(n, c, t) = scale * (count * dy.at(n, c, t) - sum_dy - xh.at(n, c, t) * sum_dy_xh);
      }
    }
  }
  return g;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  check_shape(dy, x.shape, "relu_backward");
  Tensor dx(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? dy[i] : 0.0;
  return dx;
}

PoolResult maxpool2(const Tensor& x) {
  if (x.rank() != 3) throw NumericError("maxpool2: expected [B, C, L] input");
  const std::size_t batch = x.dim(0), channels = x.dim(1), len = x.dim(2);
  if (len < 2) throw NumericError("maxpool2: length must be at least 2");
  const std::size_t out_len = len / 2;
  PoolResult r{Tensor({batch, channels, out_len}), std::vector<std::uint8_t>(batch * channels * out_len)};
  std::size_t idx = 0;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < out_len; ++t, ++idx) {
        const double a = x.at(n, c, 2 * t);
        const double b = x.at(n, c, 2 * t + 1);
        const bool second = b > a;
        r.argmax[idx] = second ? 1 : 0;
        r.y.at(n, c, t) = second ? b : a;
      }
    }
  }
  return r;
}

Tensor maxpool2_backward(const std::vector<std::size_t>& x_shape, const std::vector<std::uint8_t>& argmax,
                         const Tensor& dy) {
  Tensor dx(x_shape);
  const std::size_t batch = x_shape[0], channels = x_shape[1];
  const std::size_t out_len = x_shape[2] / 2;
  check_shape(dy, {batch, channels, out_len}, "maxpool2_backward");
  std::size_t idx = 0;
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < out_len; ++t, ++idx) {
        dx.at(n, c, 2 * t + argmax[idx]) = dy.at(n, c, t);
      }
    }
  }
  return dx;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1 || x.dim(1) != w.dim(0) || b.dim(0) != w.dim(1)) {
    throw NumericError("linear: shape mismatch x" + shape_string(x.shape) + " w" + shape_string(w.shape) +
                       " b" + shape_string(b.shape));
  }
  const std::size_t batch = x.dim(0), n_in = x.dim(1), n_out = w.dim(1);
  Tensor y({batch, n_out});
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t j = 0; j < n_out; ++j) y.at(r, j) = b[j];
    for (std::size_t i = 0; i < n_in; ++i) {
      const double xi = x.at(r, i);
      for (std::size_t j = 0; j < n_out; ++j) y.at(r, j) += xi * w.at(i, j);
    }
  }
  return y;
}

LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy) {
  const std::size_t batch = x.dim(0), n_in = x.dim(1), n_out = w.dim(1);
  check_shape(dy, {batch, n_out}, "linear_backward");
  LinearGrads g{Tensor(x.shape), Tensor(w.shape), Tensor({n_out})};
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t j = 0; j < n_out; ++j) g.db[j] += dy.at(r, j);
    for (std::size_t i = 0; i < n_in; ++i) {
      double acc = 0.0;
      const double xi = x.at(r, i);
      for (std::size_t j = 0; j < n_out; ++j) {
        acc += dy.at(r, j) * w.at(i, j);
        g.dw.at(i, j) += xi * dy.at(r, j);
      }
      g.dx.at(r, i) = acc;
    }
  }
  return g;
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng, Mode mode, Tensor* mask) {
  if (!(rate >= 0.0) || rate >= 1.0) throw ConfigError("dropout: rate must be in [0, 1)");
  if (mode == Mode::kEval || rate == 0.0) {
    if (mask) *mask = Tensor(x.shape, 1.0);
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor m(x.shape);
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = u(rng) < rate ? 0.0 : keep_scale;
    y[i] = x[i] * m[i];
  }
  if (mask) *mask = std::move(m);
  return y;
}

Tensor dropout_backward(const Tensor& mask, const Tensor& dy) {
  check_shape(dy, mask.shape, "dropout_backward");
  Tensor dx(dy.shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask[i];
  return dx;
}

Tensor grl(const Tensor& x) { return x; }

Tensor grl_backward(const Tensor& dy, double lambda) {
  Tensor dx(dy.shape);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = -lambda * dy[i];
  return dx;
}

SoftmaxCE softmax_ce(const Tensor& logits, const std::vector<int>& targets) {
  if (logits.rank() != 2 || logits.dim(0) != targets.size()) {
    throw NumericError("softmax_ce: logits " + shape_string(logits.shape) + " vs " +
                       std::to_string(targets.size()) + " targets");
  }
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  SoftmaxCE r{0.0, Tensor(logits.shape), Tensor(logits.shape)};
  if (batch == 0) return r;
  for (std::size_t n = 0; n < batch; ++n) {
    const int target = targets[n];
    if (target < 0 || static_cast<std::size_t>(target) >= classes) {
      throw NumericError("softmax_ce: target out of range");
    }
    double mx = logits.at(n, 0);
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, logits.at(n, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(logits.at(n, c) - mx);
    const double log_sum = std::log(sum);
    r.loss -= logits.at(n, static_cast<std::size_t>(target)) - mx - log_sum;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(logits.at(n, c) - mx - log_sum);
      r.probs.at(n, c) = p;
      r.grad.at(n, c) = (p - (static_cast<std::size_t>(target) == c ? 1.0 : 0.0)) / static_cast<double>(batch);
    }
  }
  r.loss /= static_cast<double>(batch);
  return r;
}

}  // namespace dafd::nn
