#include "underreport/fit.hpp"

#include <fmt/format.h>

namespace underreport {

LogDensityFn make_target(const PosteriorModel& model) {
  return [&model](std::span<const double> q, std::span<double> grad) {
    return model.log_posterior_and_gradient(q, grad);
  };
}

SampleBatch run_chains(const Dataset& data, const PriorSpec& priors, PoolingMode mode,
                       const HmcConfig& config) {
  const PosteriorModel model(data, priors, mode);
  return sample_hmc(make_target(model), model.prior_mean(), model.layout().names(), config);
}

void check_batch_layout(const SampleBatch& batch, const ParameterLayout& layout) {
  if (batch.dim != layout.dim()) {
    throw std::invalid_argument(fmt::format(
        "sample batch has {} parameters but the {}-pooling layout for this data has {}",
        batch.dim, pooling_name(layout.mode()), layout.dim()));
  }
}

}  // namespace underreport
