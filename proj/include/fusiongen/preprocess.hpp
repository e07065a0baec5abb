#pragma once

#include "fusiongen/trial.hpp"

namespace fusiongen {

/// Zero-phase frequency-domain bandpass: bins outside [band_low, band_high]
/// are zeroed, bins inside pass unchanged. The mask is a projection, so the
/// filter is exactly idempotent on its own output.
Trial bandpass_filter(const Trial& trial, const PreprocessConfig& cfg);

/// Frequency-domain resampling (spectrum truncation / zero-padding).
/// New length is round(T * target / original); sample rate is updated.
Trial resample(const Trial& trial, double target_rate_hz);

/// Keeps the first floor(seconds * rate) samples.
Trial crop(const Trial& trial, double seconds);

/// resample -> bandpass -> crop.
Trial preprocess_trial(const Trial& trial, const PreprocessConfig& cfg);
Dataset preprocess_dataset(const Dataset& ds, const PreprocessConfig& cfg);

}  // namespace fusiongen
