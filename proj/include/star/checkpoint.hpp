#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "star/optimizer.hpp"
#include "star/tensor.hpp"

namespace star {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kCheckpointMagic[8] = {'S', 'T', 'A', 'R', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Well-known metadata keys.
namespace meta {
inline constexpr const char* kConfig = "config";      // RunConfig::to_text()
inline constexpr const char* kTheta = "theta";        // sub-session threshold, seconds
inline constexpr const char* kRngState = "rng";
inline constexpr const char* kEpoch = "epoch";        // completed epochs
inline constexpr const char* kBestRecall = "best_valid_recall";
}  // namespace meta

inline constexpr const char* kInitEmbeddingTensor = "item_embedding.init";

// Binary layout, all integers little-endian:
//   magic[8] | u32 version | u32 real width (4 or 8)
//   u32 #meta    { str key | str value }
//   u32 #vocab   { str name }
//   u32 #counter { str name | u64 value }
//   u32 #tensor  { str name | u32 rank | u64 dims[rank] }
//   tensor data in directory order, reals of the declared width
// where str = u32 length + bytes. Maps serialize in key order.
struct Checkpoint {
  Precision precision = Precision::kF32;
  std::map<std::string, std::string> meta;
  std::vector<std::string> vocabulary;
  std::map<std::string, std::uint64_t> counters;
  std::map<std::string, Tensor> tensors;

  const Tensor& tensor(const std::string& name) const;
  const std::string& meta_value(const std::string& key) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Model values plus Adam state as `adam.m/<name>`, `adam.v/<name>` tensors
// and `adam.step/<name>` counters.
void store_parameters(const ParameterStore& params, Checkpoint& ckpt, bool with_optimizer_state = true);
// Restores every parameter in `params` from the checkpoint. Shapes must match.
void restore_parameters(const Checkpoint& ckpt, ParameterStore& params, bool with_optimizer_state = true);

}  // namespace star
