#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

#include "fusiongen/rng.hpp"
#include "fusiongen/trial.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("fusiongen_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline fusiongen::Trial random_trial(int channels, int length, fusiongen::Rng& rng,
                                     double rate = 250.0, int label = 0) {
    fusiongen::Trial t;
    t.samples.resize(channels, length);
    for (int c = 0; c < channels; ++c)
        for (int i = 0; i < length; ++i) t.samples(c, i) = rng.normal();
    t.label = label;
    t.subject_id = "s00";
    t.session_id = "0";
    t.sample_rate_hz = rate;
    return t;
}

inline fusiongen::Dataset random_dataset(int n_trials, int channels, int length,
                                         fusiongen::Rng& rng, int n_classes = 2,
                                         double rate = 250.0) {
    fusiongen::Dataset ds;
    ds.sample_rate_hz = rate;
    for (int c = 0; c < channels; ++c) ds.channel_names.push_back("ch" + std::to_string(c));
    for (int k = 0; k < n_classes; ++k) ds.class_names.push_back("class" + std::to_string(k));
    for (int i = 0; i < n_trials; ++i)
        ds.trials.push_back(random_trial(channels, length, rng, rate, i % n_classes));
    return ds;
}

}  // namespace testutil
