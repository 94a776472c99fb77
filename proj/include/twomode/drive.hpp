#pragma once

#include "twomode/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace twomode {

/// F(t) = F sin(omega t + phi), G = 0.
struct HarmonicDrive {
    double amplitude = 0.0;
    double omega = 1.0;
    double phi = 0.0;

    DriveSample at(double t) const noexcept { return {amplitude * std::sin(omega * t + phi), 0.0}; }
};

enum class NoiseChannel { Odd, Even };

/// Sampled noise xi(t), held constant over each interval of length dt.
/// Autocovariance convention <xi(t) xi(t')> = 2 pi S0 delta(t - t').
struct NoisePath {
    double dt = 1e-2;
    std::vector<double> samples;
    double s0 = 0.0;
    std::optional<double> cutoff;
    std::uint64_t seed = 0;
    NoiseChannel channel = NoiseChannel::Odd;

    double duration() const noexcept { return dt * static_cast<double>(samples.size()); }
};

struct NoDrive {};

struct NoiseDrive {
    std::shared_ptr<const NoisePath> path;
};

/// none | harmonic | sampled noise.
class Drive {
public:
    Drive() = default;
    Drive(NoDrive) {}
    Drive(HarmonicDrive h) : impl_(h) {}
    Drive(std::shared_ptr<const NoisePath> path) : impl_(NoiseDrive{std::move(path)}) {}

    bool is_none() const noexcept { return std::holds_alternative<NoDrive>(impl_); }
    bool is_noise() const noexcept { return std::holds_alternative<NoiseDrive>(impl_); }
    const HarmonicDrive* harmonic() const noexcept { return std::get_if<HarmonicDrive>(&impl_); }
    const NoisePath* noise() const noexcept
    {
        const auto* n = std::get_if<NoiseDrive>(&impl_);
        return n ? n->path.get() : nullptr;
    }

    /// Drive value at time t. Noise is piecewise constant; callers that
    /// step across it should query at the middle of a step.
    DriveSample at(double t) const
    {
        if (const auto* h = std::get_if<HarmonicDrive>(&impl_)) {
            return h->at(t);
        }
        if (const auto* n = std::get_if<NoiseDrive>(&impl_)) {
            const NoisePath& path = *n->path;
            if (path.samples.empty()) {
                return {};
            }
            auto idx = static_cast<long long>(std::floor(t / path.dt));
            idx = std::clamp<long long>(idx, 0, static_cast<long long>(path.samples.size()) - 1);
            const double xi = path.samples[static_cast<std::size_t>(idx)];
            return path.channel == NoiseChannel::Odd ? DriveSample{xi, 0.0} : DriveSample{0.0, xi};
        }
        return {};
    }

    std::string describe() const;

private:
    std::variant<NoDrive, HarmonicDrive, NoiseDrive> impl_;
};

} // namespace twomode
