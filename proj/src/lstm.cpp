#include "ctxdep/lstm.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>
#include <quadmath.h>
#include <sstream>

#include "json.hpp"

namespace ctxdep {

namespace {

Eigen::Index ei(std::size_t v) { return static_cast<Eigen::Index>(v); }

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

struct StepCache {
  std::uint32_t token = 0;
  Eigen::VectorXd i, f, o, u;       // gate activations
  Eigen::VectorXd c, tanh_c, h;     // cell, tanh(cell), state
  Eigen::VectorXd h_prev, c_prev;   // inputs to the step
};

struct ForwardCache {
  std::vector<StepCache> steps;
  Eigen::VectorXd z;       // b1 + W1 h_n
  Eigen::VectorXd a;       // tanh(z)
  Eigen::VectorXd dropped; // a after inverted dropout (== a in eval mode)
  Eigen::VectorXd mask;    // 1/(1-p) kept, 0 dropped; all ones in eval mode
  double s = 0.0;
};

void check_ids(const LstmParams& params, const std::vector<std::uint32_t>& ids) {
  if (ids.empty()) throw ValidationError("empty token sequence");
  for (auto id : ids)
    if (id >= params.dims.vocab_size)
      throw ValidationError("token id out of vocabulary range");
}

StepCache run_step(const LstmParams& params, std::uint32_t token,
                   const Eigen::VectorXd& h_prev, const Eigen::VectorXd& c_prev) {
  StepCache sc;
  sc.token = token;
  sc.h_prev = h_prev;
  sc.c_prev = c_prev;
  Eigen::VectorXd x = params.E.row(token).transpose();
  sc.i = sigmoid(params.W[0] * x + params.U[0] * h_prev + params.b[0]);
  sc.f = sigmoid(params.W[1] * x + params.U[1] * h_prev + params.b[1]);
  sc.o = sigmoid(params.W[2] * x + params.U[2] * h_prev + params.b[2]);
  sc.u = (params.W[3] * x + params.U[3] * h_prev + params.b[3]).array().tanh();
  sc.c = sc.i.cwiseProduct(sc.u) + sc.f.cwiseProduct(c_prev);
  sc.tanh_c = sc.c.array().tanh();
  sc.h = sc.o.cwiseProduct(sc.tanh_c);
  return sc;
}

ForwardCache run_forward(const LstmParams& params,
                         const std::vector<std::uint32_t>& ids,
                         double dropout_rate, Rng* rng) {
  check_ids(params, ids);
  ForwardCache fc;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(ei(params.dims.d_h));
  Eigen::VectorXd c = Eigen::VectorXd::Zero(ei(params.dims.d_h));
  fc.steps.reserve(ids.size());
  for (auto id : ids) {
    fc.steps.push_back(run_step(params, id, h, c));
    h = fc.steps.back().h;
    c = fc.steps.back().c;
  }
  fc.z = params.b1 + params.W1 * h;
  fc.a = fc.z.array().tanh();
  fc.mask = Eigen::VectorXd::Ones(ei(params.dims.d_s));
  if (rng != nullptr && dropout_rate > 0.0) {
    double keep_scale = 1.0 / (1.0 - dropout_rate);
    for (Eigen::Index k = 0; k < fc.mask.size(); ++k)
      fc.mask(k) = rng->uniform() >= dropout_rate ? keep_scale : 0.0;
  }
  fc.dropped = fc.a.cwiseProduct(fc.mask);
  fc.s = params.b2 + params.W2.dot(fc.dropped);
  return fc;
}

// accumulates d(residual^2)/d(params) for one example into grads
void backward(const LstmParams& params, const ForwardCache& fc, double y,
              LstmParams& grads) {
  double ds = 2.0 * (fc.s - y);
  grads.b2 += ds;
  grads.W2 += ds * fc.dropped.transpose();
  Eigen::VectorXd da =
      (ds * params.W2.transpose()).cwiseProduct(fc.mask);
  Eigen::VectorXd dz =
      da.cwiseProduct((1.0 - fc.a.array().square()).matrix());
  const Eigen::VectorXd& h_n = fc.steps.back().h;
  grads.W1 += dz * h_n.transpose();
  grads.b1 += dz;

  Eigen::VectorXd dh = params.W1.transpose() * dz;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(ei(params.dims.d_h));
  for (std::size_t t = fc.steps.size(); t-- > 0;) {
    const StepCache& sc = fc.steps[t];
    Eigen::VectorXd do_ = dh.cwiseProduct(sc.tanh_c);
    dc += dh.cwiseProduct(sc.o)
              .cwiseProduct((1.0 - sc.tanh_c.array().square()).matrix());
    Eigen::VectorXd di = dc.cwiseProduct(sc.u);
    Eigen::VectorXd du = dc.cwiseProduct(sc.i);
    Eigen::VectorXd df = dc.cwiseProduct(sc.c_prev);
    Eigen::VectorXd dc_prev = dc.cwiseProduct(sc.f);

    std::array<Eigen::VectorXd, 4> da_gate;
    da_gate[0] = di.cwiseProduct(sc.i).cwiseProduct((1.0 - sc.i.array()).matrix());
    da_gate[1] = df.cwiseProduct(sc.f).cwiseProduct((1.0 - sc.f.array()).matrix());
    da_gate[2] = do_.cwiseProduct(sc.o).cwiseProduct((1.0 - sc.o.array()).matrix());
    da_gate[3] = du.cwiseProduct((1.0 - sc.u.array().square()).matrix());

    Eigen::VectorXd x = params.E.row(sc.token).transpose();
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(ei(params.dims.d_w));
    Eigen::VectorXd dh_prev = Eigen::VectorXd::Zero(ei(params.dims.d_h));
    for (int g = 0; g < 4; ++g) {
      grads.W[g] += da_gate[g] * x.transpose();
      grads.U[g] += da_gate[g] * sc.h_prev.transpose();
      grads.b[g] += da_gate[g];
      dx += params.W[g].transpose() * da_gate[g];
      dh_prev += params.U[g].transpose() * da_gate[g];
    }
    grads.E.row(sc.token) += dx.transpose();
    dh = dh_prev;
    dc = dc_prev;
  }
}

// Quad-precision loss evaluation for the finite-difference reference. In
// double, the loss difference across a 1e-5 perturbation cancels to below one
// ulp for the smallest gradient entries, so the numeric side needs the extra
// mantissa bits; parameters stay double, only the arithmetic is widened.
__float128 loss_quad(const LstmParams& p, const LstmExample& example) {
  std::size_t d_w = p.dims.d_w, d_h = p.dims.d_h, d_s = p.dims.d_s;
  std::vector<__float128> h(d_h, 0), c(d_h, 0), x(d_w), pre(d_h), gate(4 * d_h);
  for (auto id : example.ids) {
    for (std::size_t j = 0; j < d_w; ++j) x[j] = p.E(ei(id), ei(j));
    for (int g = 0; g < 4; ++g)
      for (std::size_t r = 0; r < d_h; ++r) {
        __float128 acc = p.b[g](ei(r));
        for (std::size_t j = 0; j < d_w; ++j)
          acc += __float128(p.W[g](ei(r), ei(j))) * x[j];
        for (std::size_t j = 0; j < d_h; ++j)
          acc += __float128(p.U[g](ei(r), ei(j))) * h[j];
        gate[g * d_h + r] =
            g == 3 ? tanhq(acc) : 1.0Q / (1.0Q + expq(-acc));
      }
    for (std::size_t r = 0; r < d_h; ++r) {
      c[r] = gate[r] * gate[3 * d_h + r] + gate[d_h + r] * c[r];
      pre[r] = gate[2 * d_h + r] * tanhq(c[r]);
    }
    h = pre;
  }
  __float128 s = p.b2;
  for (std::size_t k = 0; k < d_s; ++k) {
    __float128 z = p.b1(ei(k));
    for (std::size_t j = 0; j < d_h; ++j)
      z += __float128(p.W1(ei(k), ei(j))) * h[j];
    s += __float128(p.W2(ei(k))) * tanhq(z);
  }
  __float128 r = __float128(example.y) - s;
  return r * r;
}

}  // namespace

LstmParams LstmParams::zeros(const LstmDims& dims) {
  LstmParams p;
  p.dims = dims;
  p.E = Eigen::MatrixXd::Zero(ei(dims.vocab_size), ei(dims.d_w));
  for (int g = 0; g < 4; ++g) {
    p.W[g] = Eigen::MatrixXd::Zero(ei(dims.d_h), ei(dims.d_w));
    p.U[g] = Eigen::MatrixXd::Zero(ei(dims.d_h), ei(dims.d_h));
    p.b[g] = Eigen::VectorXd::Zero(ei(dims.d_h));
  }
  p.W1 = Eigen::MatrixXd::Zero(ei(dims.d_s), ei(dims.d_h));
  p.b1 = Eigen::VectorXd::Zero(ei(dims.d_s));
  p.W2 = Eigen::RowVectorXd::Zero(ei(dims.d_s));
  p.b2 = 0.0;
  return p;
}

LstmParams init_params(const LstmDims& dims, double init_scale,
                       std::uint64_t seed) {
  LstmParams p = LstmParams::zeros(dims);
  Rng rng(seed);
  auto fill = [&](double* data, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k)
      data[k] = rng.uniform(-init_scale, init_scale);
  };
  fill(p.E.data(), static_cast<std::size_t>(p.E.size()));
  for (int g = 0; g < 4; ++g) fill(p.W[g].data(), static_cast<std::size_t>(p.W[g].size()));
  for (int g = 0; g < 4; ++g) fill(p.U[g].data(), static_cast<std::size_t>(p.U[g].size()));
  fill(p.W1.data(), static_cast<std::size_t>(p.W1.size()));
  fill(p.W2.data(), static_cast<std::size_t>(p.W2.size()));
  // forget-gate bias starts open to help memory retention early in training
  p.b[1].setConstant(1.0);
  return p;
}

LstmState lstm_step(const LstmParams& params, std::uint32_t token_id,
                    const LstmState& state) {
  if (token_id >= params.dims.vocab_size)
    throw ValidationError("token id out of vocabulary range");
  StepCache sc = run_step(params, token_id, state.h, state.c);
  LstmState out;
  out.h = sc.h;
  out.c = sc.c;
  return out;
}

Eigen::VectorXd encode(const LstmParams& params,
                       const std::vector<std::uint32_t>& ids) {
  ForwardCache fc = run_forward(params, ids, 0.0, nullptr);
  return fc.steps.back().h;
}

std::vector<Eigen::VectorXd> encode_states(const LstmParams& params,
                                           const std::vector<std::uint32_t>& ids) {
  ForwardCache fc = run_forward(params, ids, 0.0, nullptr);
  std::vector<Eigen::VectorXd> states;
  states.reserve(fc.steps.size());
  for (const auto& sc : fc.steps) states.push_back(sc.h);
  return states;
}

double forward(const LstmParams& params, const std::vector<std::uint32_t>& ids,
               double dropout_rate, Rng* rng) {
  return run_forward(params, ids, dropout_rate, rng).s;
}

double squared_residual_loss(const std::vector<double>& scores,
                             const std::vector<double>& targets) {
  if (scores.size() != targets.size() || scores.empty())
    throw ValidationError("scores/targets length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double r = targets[i] - scores[i];
    loss += r * r;
  }
  return loss;
}

LstmParams gradients(const LstmParams& params,
                     const std::vector<LstmExample>& batch,
                     double dropout_rate, std::uint64_t dropout_seed,
                     double* batch_loss) {
  if (batch.empty()) throw ValidationError("empty batch");
  LstmParams grads = LstmParams::zeros(params.dims);
  Rng rng(dropout_seed);
  Rng* rng_ptr = dropout_rate > 0.0 ? &rng : nullptr;
  double loss = 0.0;
  for (const auto& example : batch) {
    ForwardCache fc = run_forward(params, example.ids, dropout_rate, rng_ptr);
    double r = example.y - fc.s;
    loss += r * r;
    backward(params, fc, example.y, grads);
  }
  if (batch_loss) *batch_loss = loss;
  return grads;
}

GradCheckResult gradient_check(LstmParams& params, const LstmExample& example,
                               double eps) {
  LstmParams analytic = gradients(params, {example}, 0.0, 0);
  GradCheckResult result;

  std::vector<std::pair<double*, std::size_t>> blocks;
  std::vector<const char*> names;
  params.for_each_block([&](const char* name, double* data, std::size_t count) {
    blocks.emplace_back(data, count);
    names.push_back(name);
  });
  std::vector<std::pair<const double*, std::size_t>> grad_blocks;
  analytic.for_each_block([&](const char*, const double* data, std::size_t count) {
    grad_blocks.emplace_back(data, count);
  });

  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    auto [data, count] = blocks[bi];
    for (std::size_t k = 0; k < count; ++k) {
      double saved = data[k];
      data[k] = saved + eps;
      __float128 loss_plus = loss_quad(params, example);
      data[k] = saved - eps;
      __float128 loss_minus = loss_quad(params, example);
      data[k] = saved;
      double numeric =
          double((loss_plus - loss_minus) / (2.0Q * __float128(eps)));
      double g = grad_blocks[bi].first[k];
      double rel = std::abs(g - numeric) /
                   std::max({std::abs(g), std::abs(numeric), 1e-12});
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_block = names[bi];
        result.worst_index = k;
      }
    }
  }
  return result;
}

LstmParams train_lstm(const std::vector<LstmExample>& dataset,
                      const LstmDims& dims, const TrainConfig& config,
                      std::vector<EpochStats>* log) {
  if (dataset.empty()) throw ValidationError("empty training set");
  if (config.learning_rate < 0.0) throw ValidationError("negative learning rate");
  for (const auto& example : dataset)
    if (example.ids.empty()) throw ValidationError("empty sequence in training set");

  LstmParams params = init_params(dims, config.init_scale, config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(config.seed ^ 0x5deece66dULL);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size();
         begin += config.batch_size, ++batch_index) {
      std::size_t end = std::min(begin + config.batch_size, order.size());
      std::vector<LstmExample> batch;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) batch.push_back(dataset[order[i]]);

      double batch_loss = 0.0;
      std::uint64_t dropout_seed =
          config.seed + 0x9e3779b9ULL * (epoch + 1) + batch_index;
      LstmParams grads =
          gradients(params, batch, config.dropout_rate, dropout_seed, &batch_loss);
      epoch_loss += batch_loss;

      double inv_batch = 1.0 / static_cast<double>(batch.size());
      double sq_norm = 0.0;
      grads.for_each_block([&](const char*, const double* data, std::size_t count) {
        for (std::size_t k = 0; k < count; ++k) {
          double g = data[k] * inv_batch;
          sq_norm += g * g;
        }
      });
      double norm = std::sqrt(sq_norm);
      double scale = inv_batch;
      if (config.grad_clip > 0.0 && norm > config.grad_clip)
        scale *= config.grad_clip / norm;

      std::vector<const double*> grad_ptrs;
      grads.for_each_block([&](const char*, const double* data, std::size_t) {
        grad_ptrs.push_back(data);
      });
      std::size_t bi = 0;
      params.for_each_block([&](const char*, double* data, std::size_t count) {
        const double* g = grad_ptrs[bi++];
        for (std::size_t k = 0; k < count; ++k)
          data[k] -= config.learning_rate * scale * g[k];
      });
    }
    double mean_loss = epoch_loss / static_cast<double>(dataset.size());
    if (!std::isfinite(mean_loss)) {
      std::ostringstream msg;
      msg << "training diverged at epoch " << epoch + 1
          << " (non-finite loss); try a lower learning_rate";
      throw DivergenceError(msg.str());
    }
    if (log) {
      auto elapsed = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
      log->push_back(EpochStats{epoch + 1, mean_loss, elapsed});
    }
  }
  return params;
}

std::string lstm_to_json(const LstmParams& params, const TrainConfig& config,
                         const std::string& vocab_hash) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["dims"] = {{"vocab_size", params.dims.vocab_size},
               {"d_w", params.dims.d_w},
               {"d_h", params.dims.d_h},
               {"d_s", params.dims.d_s}};
  j["vocab_hash"] = vocab_hash;
  j["config"] = {{"learning_rate", config.learning_rate},
                 {"epochs", config.epochs},
                 {"batch_size", config.batch_size},
                 {"seed", config.seed},
                 {"dropout_rate", config.dropout_rate},
                 {"init_scale", config.init_scale},
                 {"grad_clip", config.grad_clip}};
  nlohmann::ordered_json blocks = nlohmann::ordered_json::object();
  params.for_each_block([&](const char* name, const double* data,
                            std::size_t count) {
    blocks[name] = base64_encode(data, count * sizeof(double));
  });
  j["params"] = blocks;
  return j.dump();
}

LstmParams lstm_from_json(const std::string& text, std::string* vocab_hash) {
  auto j = nlohmann::json::parse(text);
  LstmDims dims;
  dims.vocab_size = j.at("dims").at("vocab_size").get<std::size_t>();
  dims.d_w = j.at("dims").at("d_w").get<std::size_t>();
  dims.d_h = j.at("dims").at("d_h").get<std::size_t>();
  dims.d_s = j.at("dims").at("d_s").get<std::size_t>();
  if (vocab_hash) *vocab_hash = j.value("vocab_hash", "");
  LstmParams params = LstmParams::zeros(dims);
  const auto& blocks = j.at("params");
  params.for_each_block([&](const char* name, double* data, std::size_t count) {
    auto bytes = base64_decode(blocks.at(name).get<std::string>());
    if (bytes.size() != count * sizeof(double))
      throw FormatError(std::string("parameter block size mismatch: ") + name);
    std::memcpy(data, bytes.data(), bytes.size());
  });
  return params;
}

}  // namespace ctxdep
