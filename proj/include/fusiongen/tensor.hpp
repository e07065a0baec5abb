#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fusiongen {

/// Dense rank-3 tensor indexed (feature depth, EEG channel, time),
/// time fastest. All layer math runs on this type at 64-bit precision.
struct Tensor3 {
    int depth = 0;
    int channels = 0;
    int time = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int d, int c, int t)
        : depth(d), channels(c), time(t),
          v(static_cast<std::size_t>(d) * static_cast<std::size_t>(c) *
            static_cast<std::size_t>(t), 0.0) {
        if (d < 1 || c < 1 || t < 1) throw std::runtime_error("Tensor3: dims must be >= 1");
    }

    std::size_t index(int d, int c, int t) const {
        return (static_cast<std::size_t>(d) * static_cast<std::size_t>(channels) +
                static_cast<std::size_t>(c)) * static_cast<std::size_t>(time) +
               static_cast<std::size_t>(t);
    }
    double& at(int d, int c, int t) { return v[index(d, c, t)]; }
    double at(int d, int c, int t) const { return v[index(d, c, t)]; }

    bool same_shape(const Tensor3& o) const {
        return depth == o.depth && channels == o.channels && time == o.time;
    }
    std::size_t size() const { return v.size(); }
};

}  // namespace fusiongen
