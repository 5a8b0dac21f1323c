#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "coldbrew/errors.hpp"
#include "coldbrew/tape.hpp"

namespace coldbrew {

/// One named float32 tensor of a checkpoint file.
struct NamedTensor {
  std::string name;
  Matrix<float> data;
};

/// Binary checkpoint: "CBCK", u32 version, u32 tensor count, then per tensor
/// u32 name length, name bytes, u32 rows, u32 cols, float32 LE row-major data.
void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

template <typename Scalar>
std::vector<NamedTensor> to_tensors(const ParameterRefs<Scalar>& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back({p->name, p->value.template cast<float>()});
  return out;
}

/// Copy tensors into same-named parameters; every parameter must be present
/// with a matching shape.
template <typename Scalar>
void assign_tensors(const std::vector<NamedTensor>& tensors, const ParameterRefs<Scalar>& params) {
  for (auto* p : params) {
    const NamedTensor* hit = nullptr;
    for (const auto& t : tensors)
      if (t.name == p->name) hit = &t;
    if (hit == nullptr) throw InvalidInput("checkpoint is missing tensor '" + p->name + "'");
    if (hit->data.rows() != p->value.rows() || hit->data.cols() != p->value.cols())
      throw InvalidInput("checkpoint tensor '" + p->name + "' has the wrong shape");
    p->value = hit->data.template cast<Scalar>();
    p->zero_grad();
  }
}

}  // namespace coldbrew
