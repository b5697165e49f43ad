#include "cvrpdiff/model.hpp"

#include "cvrpdiff/errors.hpp"

namespace cvrpdiff {

void ModelConfig::validate() const {
  if (d <= 0 || heads <= 0 || gat_layers <= 0 || denoiser_layers <= 0 || encoder_layers <= 0 || !(clip > 0.0))
    throw InputError("model sizes and clip must be positive");
  if (d % 2 != 0) throw InputError("hidden width d must be even");
  if (d % heads != 0) throw InputError("hidden width d must be divisible by the head count");
}

}  // namespace cvrpdiff
