#pragma once

#include "fusiongen/trial.hpp"

namespace fusiongen {

/// Deterministic synthetic EEG. Class c carries a sinusoid at
/// class_freqs_hz[c] with random phase on channel (c mod C); every channel
/// adds 1/f-shaped noise scaled to `noise_floor`; the whole trial is mixed by
/// a per-subject matrix (1-m)*I + m*Q with Q random orthogonal. Labels are
/// balanced and interleaved within each subject.
Dataset synthesize_dataset(const SynthConfig& cfg);

}  // namespace fusiongen
