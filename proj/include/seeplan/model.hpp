#pragma once

// Physical layer and energy bookkeeping for a source / full-duplex jamming
// destination / passive eavesdropper link. Everything here is a pure function
// of its arguments.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "seeplan/error.hpp"

namespace seeplan {

/// The four quantized links: source->destination, source->eavesdropper,
/// destination self-interference, destination->eavesdropper (jamming).
enum class Link : std::size_t { SD = 0, SE = 1, DD = 2, DE = 3 };

inline constexpr std::size_t kLinkCount = 4;

inline constexpr std::array<const char*, kLinkCount> kLinkNames = {"sd", "se", "dd", "de"};

/// One MDP state: a gain level index per link plus both battery levels in
/// energy units.
struct State {
    std::array<std::size_t, kLinkCount> gain_idx{};
    int b_src = 0;
    int b_dst = 0;

    friend bool operator==(const State&, const State&) = default;
};

/// Indices into SystemParams::power_levels for transmit and jamming power.
struct Action {
    std::size_t ps_idx = 0;
    std::size_t pd_idx = 0;

    friend bool operator==(const Action&, const Action&) = default;
};

/// Quantized channel power gain levels of one link and the first-order
/// Markov transition matrix over them (row = current level).
struct ChannelModel {
    std::vector<double> levels;
    std::vector<std::vector<double>> transition;
};

/// Channel with `levels.size()` states that stays put with `stay_prob` and
/// otherwise moves uniformly to one of the other levels.
inline ChannelModel symmetric_channel(std::vector<double> levels, double stay_prob) {
    const std::size_t n = levels.size();
    ChannelModel ch{std::move(levels), {}};
    ch.transition.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) {
                ch.transition[i][j] = n == 1 ? 1.0 : stay_prob;
            } else {
                ch.transition[i][j] = (1.0 - stay_prob) / static_cast<double>(n - 1);
            }
        }
    }
    return ch;
}

inline ChannelModel default_channel() { return symmetric_channel({1.655e-13, 3.311e-13}, 0.9); }

struct SystemParams {
    double bandwidth_hz = 2e6;
    double noise_psd = std::pow(10.0, -20.4);  // W/Hz
    double sic_factor = 1e-5;                  // residual self-interference, 0 = perfect SIC
    double slot_seconds = 5e-3;
    double energy_unit_joules = 2.5e-6;

    int harvest_units_src = 2;
    int harvest_units_dst = 2;
    double harvest_prob_src = 0.5;
    double harvest_prob_dst = 0.5;
    int battery_cap_src = 5;
    int battery_cap_dst = 5;

    std::vector<double> power_levels{0.0, 0.5e-3, 1e-3, 2e-3};  // W
    std::array<ChannelModel, kLinkCount> channels{default_channel(), default_channel(), default_channel(),
                                                 default_channel()};

    int horizon = 20;
    /// Discount for the infinite-horizon planner; when unset, 1 - 1/horizon is used.
    std::optional<double> discount;

    State initial_state{{1, 1, 1, 1}, 5, 5};

    const ChannelModel& channel(Link link) const { return channels[static_cast<std::size_t>(link)]; }
    ChannelModel& channel(Link link) { return channels[static_cast<std::size_t>(link)]; }
};

/// Channel power gains of the four links in one slot.
struct LinkGains {
    double g_sd = 0.0;
    double g_se = 0.0;
    double g_dd = 0.0;
    double g_de = 0.0;
};

struct SinrPair {
    double destination = 0.0;
    double eavesdropper = 0.0;
};

inline double noise_floor(const SystemParams& params) { return params.bandwidth_hz * params.noise_psd; }

/// SINR at the destination (residual self-interference from its own jamming)
/// and at the eavesdropper (full jamming interference).
inline SinrPair sinr_pair(const LinkGains& gains, double p_s, double p_d, const SystemParams& params) {
    const double floor = noise_floor(params);
    if (!(floor > 0.0) || !std::isfinite(floor)) {
        throw ParameterError("noise floor W*N0 must be positive and finite");
    }
    if (p_s < 0.0 || p_d < 0.0) {
        throw ParameterError("powers must be nonnegative");
    }
    SinrPair out;
    out.destination = gains.g_sd * p_s / (params.sic_factor * p_d * gains.g_dd + floor);
    out.eavesdropper = gains.g_se * p_s / (p_d * gains.g_de + floor);
    return out;
}

/// Secrecy rate in bps, clamped at zero.
inline double secrecy_rate(double sinr_d, double sinr_e, const SystemParams& params) {
    const double c = params.bandwidth_hz * (std::log2(1.0 + sinr_d) - std::log2(1.0 + sinr_e));
    return c > 0.0 ? c : 0.0;
}

inline double secrecy_rate(const LinkGains& gains, double p_s, double p_d, const SystemParams& params) {
    const auto sinr = sinr_pair(gains, p_s, p_d, params);
    return secrecy_rate(sinr.destination, sinr.eavesdropper, params);
}

/// Secure bits per joule for one slot. Idle slots (both powers zero) earn 0.
inline double immediate_reward(const LinkGains& gains, double p_s, double p_d, const SystemParams& params) {
    const double total = p_s + p_d;
    if (total <= 0.0) {
        return 0.0;
    }
    return secrecy_rate(gains, p_s, p_d, params) / total;
}

/// Battery level of the next slot: spend, then add the harvest, then clip.
inline int battery_next(int b, int consumed_units, int harvested_units, int cap) {
    if (consumed_units < 0 || consumed_units > b) {
        throw InfeasibleError("consumption of " + std::to_string(consumed_units) + " units exceeds battery level " +
                              std::to_string(b));
    }
    const int level = b - consumed_units + harvested_units;
    return level < cap ? level : cap;
}

/// Energy units drained from the battery by transmitting at `p` watts for one slot.
inline int power_to_units(double p, const SystemParams& params) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
        throw ConfigError("power level must be a finite nonnegative value");
    }
    const double q = p * params.slot_seconds / params.energy_unit_joules;
    const double nearest = std::round(q);
    if (!std::isfinite(q) || std::abs(q - nearest) > 1e-9 * std::max(1.0, q)) {
        throw ConfigError("power level " + std::to_string(p) + " W maps to " + std::to_string(q) +
                          " energy units per slot, which is not an integer");
    }
    return static_cast<int>(nearest);
}

inline LinkGains gains_of(const State& s, const SystemParams& params) {
    return {params.channels[0].levels.at(s.gain_idx[0]), params.channels[1].levels.at(s.gain_idx[1]),
            params.channels[2].levels.at(s.gain_idx[2]), params.channels[3].levels.at(s.gain_idx[3])};
}

/// Throws ParameterError / ConfigError if any invariant of SystemParams is broken.
inline void validate(const SystemParams& p) {
    auto fail = [](const std::string& what) { throw ParameterError(what); };
    if (!(p.bandwidth_hz > 0.0) || !(p.noise_psd > 0.0) || !std::isfinite(noise_floor(p))) {
        fail("bandwidth and noise PSD must be positive");
    }
    if (!(p.sic_factor >= 0.0 && p.sic_factor <= 1.0)) fail("sic_factor must lie in [0, 1]");
    if (!(p.slot_seconds > 0.0)) fail("slot_seconds must be positive");
    if (!(p.energy_unit_joules > 0.0)) fail("energy_unit_joules must be positive");
    if (p.harvest_units_src < 0 || p.harvest_units_dst < 0) fail("harvest units must be nonnegative");
    if (!(p.harvest_prob_src >= 0.0 && p.harvest_prob_src <= 1.0) ||
        !(p.harvest_prob_dst >= 0.0 && p.harvest_prob_dst <= 1.0)) {
        fail("harvest probabilities must lie in [0, 1]");
    }
    if (p.battery_cap_src < 0 || p.battery_cap_dst < 0) fail("battery caps must be nonnegative");
    if (p.power_levels.empty() || p.power_levels.front() != 0.0) fail("power_levels must start at 0");
    for (std::size_t i = 1; i < p.power_levels.size(); ++i) {
        if (!(p.power_levels[i] > p.power_levels[i - 1])) fail("power_levels must be strictly increasing");
    }
    for (double level : p.power_levels) {
        (void)power_to_units(level, p);
    }
    for (std::size_t l = 0; l < kLinkCount; ++l) {
        const auto& ch = p.channels[l];
        const std::string name = kLinkNames[l];
        if (ch.levels.empty()) fail("link " + name + " has no gain levels");
        for (double g : ch.levels) {
            if (!(g > 0.0) || !std::isfinite(g)) fail("link " + name + " gain levels must be positive");
        }
        if (ch.transition.size() != ch.levels.size()) fail("link " + name + " transition matrix has wrong size");
        for (const auto& row : ch.transition) {
            if (row.size() != ch.levels.size()) fail("link " + name + " transition matrix has wrong size");
            double sum = 0.0;
            for (double v : row) {
                if (!(v >= 0.0)) fail("link " + name + " transition probabilities must be nonnegative");
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-12) fail("link " + name + " transition row does not sum to 1");
        }
    }
    if (p.horizon < 1) fail("horizon must be at least 1");
    if (p.discount && !(*p.discount > 0.0 && *p.discount < 1.0)) fail("discount must lie in (0, 1)");
    const State& s0 = p.initial_state;
    for (std::size_t l = 0; l < kLinkCount; ++l) {
        if (s0.gain_idx[l] >= p.channels[l].levels.size()) fail("initial state gain index out of range");
    }
    if (s0.b_src < 0 || s0.b_src > p.battery_cap_src || s0.b_dst < 0 || s0.b_dst > p.battery_cap_dst) {
        fail("initial state battery out of range");
    }
}

}  // namespace seeplan
