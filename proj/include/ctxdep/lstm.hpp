#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ctxdep/common.hpp"

namespace ctxdep {

struct LstmDims {
  std::size_t vocab_size = 0;
  std::size_t d_w = 64;
  std::size_t d_h = 64;
  std::size_t d_s = 32;
};

// Gate index convention used throughout: 0=input, 1=forget, 2=output, 3=update.
struct LstmParams {
  LstmDims dims;
  Eigen::MatrixXd E;                 // vocab_size x d_w
  std::array<Eigen::MatrixXd, 4> W;  // d_h x d_w
  std::array<Eigen::MatrixXd, 4> U;  // d_h x d_h
  std::array<Eigen::VectorXd, 4> b;  // d_h
  Eigen::MatrixXd W1;                // d_s x d_h
  Eigen::VectorXd b1;                // d_s
  Eigen::RowVectorXd W2;             // 1 x d_s
  double b2 = 0.0;

  static LstmParams zeros(const LstmDims& dims);

  // visits every parameter block in the serialized order:
  // E, W^i, W^f, W^o, W^u, U^i, U^f, U^o, U^u, b^i, b^f, b^o, b^u, W1, b1, W2, b2
  template <typename Fn>
  void for_each_block(Fn&& fn) {
    fn("E", E.data(), static_cast<std::size_t>(E.size()));
    for (int g = 0; g < 4; ++g) fn(kGateWNames[g], W[g].data(), static_cast<std::size_t>(W[g].size()));
    for (int g = 0; g < 4; ++g) fn(kGateUNames[g], U[g].data(), static_cast<std::size_t>(U[g].size()));
    for (int g = 0; g < 4; ++g) fn(kGateBNames[g], b[g].data(), static_cast<std::size_t>(b[g].size()));
    fn("W1", W1.data(), static_cast<std::size_t>(W1.size()));
    fn("b1", b1.data(), static_cast<std::size_t>(b1.size()));
    fn("W2", W2.data(), static_cast<std::size_t>(W2.size()));
    fn("b2", &b2, std::size_t{1});
  }

  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    const_cast<LstmParams*>(this)->for_each_block(
        [&](const char* name, double* data, std::size_t count) {
          fn(name, static_cast<const double*>(data), count);
        });
  }

  static constexpr const char* kGateWNames[4] = {"W_i", "W_f", "W_o", "W_u"};
  static constexpr const char* kGateUNames[4] = {"U_i", "U_f", "U_o", "U_u"};
  static constexpr const char* kGateBNames[4] = {"b_i", "b_f", "b_o", "b_u"};
};

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  static LstmState initial(std::size_t d_h) {
    LstmState s;
    s.h = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_h));
    s.c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_h));
    return s;
  }
};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  double dropout_rate = 0.1;
  double init_scale = 0.08;
  double grad_clip = 5.0;
};

struct LstmExample {
  std::vector<std::uint32_t> ids;
  double y = 0.0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_block;
  std::size_t worst_index = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double wall_seconds = 0.0;
};

LstmParams init_params(const LstmDims& dims, double init_scale,
                       std::uint64_t seed);

LstmState lstm_step(const LstmParams& params, std::uint32_t token_id,
                    const LstmState& state);

// Final recurrent state h_n of the sequence (h_0 = 0).
Eigen::VectorXd encode(const LstmParams& params,
                       const std::vector<std::uint32_t>& ids);

// All intermediate states h_1..h_n, for prefix inspection.
std::vector<Eigen::VectorXd> encode_states(const LstmParams& params,
                                           const std::vector<std::uint32_t>& ids);

// Regression score. When rng is non-null, inverted dropout with the given
// rate is applied to the feed-forward hidden layer (train mode); a null rng
// is eval mode.
double forward(const LstmParams& params, const std::vector<std::uint32_t>& ids,
               double dropout_rate = 0.0, Rng* rng = nullptr);

double squared_residual_loss(const std::vector<double>& scores,
                             const std::vector<double>& targets);

// Exact BPTT gradients of the summed squared residuals over the batch.
// Returns the realized batch loss through `batch_loss` when non-null.
LstmParams gradients(const LstmParams& params,
                     const std::vector<LstmExample>& batch,
                     double dropout_rate, std::uint64_t dropout_seed,
                     double* batch_loss = nullptr);

GradCheckResult gradient_check(LstmParams& params, const LstmExample& example,
                               double eps);

LstmParams train_lstm(const std::vector<LstmExample>& dataset,
                      const LstmDims& dims, const TrainConfig& config,
                      std::vector<EpochStats>* log = nullptr);

// versioned JSON with base64 little-endian float64 parameter blocks
std::string lstm_to_json(const LstmParams& params, const TrainConfig& config,
                         const std::string& vocab_hash);
LstmParams lstm_from_json(const std::string& text,
                          std::string* vocab_hash = nullptr);

}  // namespace ctxdep
