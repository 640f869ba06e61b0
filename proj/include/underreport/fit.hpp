#pragma once

#include "underreport/dataset.hpp"
#include "underreport/hmc.hpp"
#include "underreport/layout.hpp"
#include "underreport/model.hpp"
#include "underreport/priors.hpp"

namespace underreport {

/// Wraps a PosteriorModel as an HMC target. The model must outlive the result.
LogDensityFn make_target(const PosteriorModel& model);

/// Samples the marginalised posterior for `data`. Chains start at the prior
/// means jittered by config.init_scale.
SampleBatch run_chains(const Dataset& data, const PriorSpec& priors, PoolingMode mode,
                       const HmcConfig& config);

/// Throws std::invalid_argument unless `batch` was produced for this layout.
void check_batch_layout(const SampleBatch& batch, const ParameterLayout& layout);

}  // namespace underreport
