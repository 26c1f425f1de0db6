#pragma once

#include "crt/errors.hpp"
#include "crt/types.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace crt::dp::detail {

/// Per-site seeding weights of the during-treatment sum: the t-th term of f
/// for a state with cumulative log-kill K (excluding theta*S) and chemo S is
/// exp(-xi * (K + theta*S)) * weight(t, S).
class SeedingWeights {
public:
    SeedingWeights(const TumorParams& params, const std::vector<MetastaticSite>& sites, const Horizon& horizon,
                   double chemo_total) {
        const double log_x0 = params.xi * std::log(params.x0);
        for (const auto& s : sites) {
            if (s.p > 0) omega_.push_back(s.omega);
        }
        log_a_.resize(static_cast<size_t>(horizon.sessions + 2));
        for (int k = 0; k <= horizon.sessions + 1; ++k) {
            auto& row = log_a_[static_cast<size_t>(k)];
            for (const auto& s : sites) {
                if (!(s.p > 0)) continue;
                row.push_back(log_x0 + std::log(s.p) + s.mu * (horizon.T - k) + params.xi * params.repopulation(k) -
                              s.omega * chemo_total);
            }
        }
    }

    [[nodiscard]] double weight(int k, double S) const {
        const auto& row = log_a_[static_cast<size_t>(k)];
        double total = 0.0;
        for (size_t i = 0; i < row.size(); ++i) total += std::exp(row[i] + omega_[i] * S);
        return total;
    }

    [[nodiscard]] std::size_t site_count() const { return omega_.size(); }
    [[nodiscard]] double log_a(int k, std::size_t i) const { return log_a_[static_cast<size_t>(k)][i]; }
    [[nodiscard]] double omega(std::size_t i) const { return omega_[i]; }

private:
    std::vector<std::vector<double>> log_a_;
    std::vector<double> omega_;
};

/// Weights tabulated over the on-grid chemo totals S = s * c_step, s = 0..max_units.
class WeightTable {
public:
    WeightTable(const SeedingWeights& w, int sessions, long max_units, double c_step)
        : stride_(static_cast<size_t>(max_units + 1)) {
        table_.resize(static_cast<size_t>(sessions + 2) * stride_);
        for (int k = 0; k <= sessions + 1; ++k) {
            for (long s = 0; s <= max_units; ++s) {
                table_[static_cast<size_t>(k) * stride_ + static_cast<size_t>(s)] = w.weight(k, s * c_step);
            }
        }
    }

    [[nodiscard]] double at(int k, long s) const {
        return table_[static_cast<size_t>(k) * stride_ + static_cast<size_t>(s)];
    }

private:
    size_t stride_;
    std::vector<double> table_;
};

/// Packs up to four non-negative bounded integers into one 64-bit key, V in
/// the lowest bits so keys sort by (W, S, U, V). The packing is linear without
/// carries between fields, so adding the packed increment of an action to a
/// packed state preserves key order.
class KeyPacker {
public:
    KeyPacker(std::uint64_t max_u, std::uint64_t max_v, std::uint64_t max_s, std::uint64_t max_w) {
        bits_u_ = std::bit_width(max_u);
        bits_v_ = std::bit_width(max_v);
        bits_s_ = std::bit_width(max_s);
        bits_w_ = std::bit_width(max_w);
        if (bits_u_ + bits_v_ + bits_s_ + bits_w_ > 64) {
            throw InvalidArgument("grid too fine: state key does not fit in 64 bits");
        }
        shift_u_ = bits_v_;
        shift_s_ = shift_u_ + bits_u_;
        shift_w_ = shift_s_ + bits_s_;
    }

    [[nodiscard]] std::uint64_t pack(std::uint64_t u, std::uint64_t v, std::uint64_t s, std::uint64_t w) const {
        return v | (u << shift_u_) | (s << shift_s_) | (w << shift_w_);
    }

    [[nodiscard]] std::int64_t u(std::uint64_t key) const { return field(key, shift_u_, bits_u_); }
    [[nodiscard]] std::int64_t v(std::uint64_t key) const { return field(key, 0, bits_v_); }
    [[nodiscard]] std::int64_t s(std::uint64_t key) const { return field(key, shift_s_, bits_s_); }
    [[nodiscard]] std::int64_t w(std::uint64_t key) const { return field(key, shift_w_, bits_w_); }

    /// Key with V dropped: identifies the (U, S, W) group of a state.
    [[nodiscard]] std::uint64_t group(std::uint64_t key) const { return bits_v_ == 64 ? 0 : key >> bits_v_; }
    [[nodiscard]] std::uint64_t from_group(std::uint64_t group, std::uint64_t v) const {
        return (group << bits_v_) | v;
    }

private:
    [[nodiscard]] static std::int64_t field(std::uint64_t key, int shift, int bits) {
        if (bits == 0) return 0;
        const std::uint64_t mask = bits == 64 ? ~0ULL : ((1ULL << bits) - 1);
        return static_cast<std::int64_t>((key >> shift) & mask);
    }

    int bits_u_ = 0;
    int bits_v_ = 0;
    int bits_s_ = 0;
    int bits_w_ = 0;
    int shift_u_ = 0;
    int shift_s_ = 0;
    int shift_w_ = 0;
};

/// OAR BEDs and the tumor BED computed from integer grid sums.
class DoseChecks {
public:
    DoseChecks(const Constraints& c, double d_step) : d_step_(d_step), floor_(c.tumor_bed_floor()) {
        tumor_quad_ = d_step * d_step / c.tumor_ab_ratio;
        for (const auto& o : c.oars) {
            oars_.push_back({o.gamma * d_step, o.gamma * o.gamma * d_step * d_step / o.ab_ratio, o.bed_cap});
        }
    }

    [[nodiscard]] bool oar_ok(std::int64_t u, std::int64_t v) const {
        for (const auto& o : oars_) {
            if (o.lin * static_cast<double>(u) + o.quad * static_cast<double>(v) > o.cap + kConstraintTol) return false;
        }
        return true;
    }

    [[nodiscard]] double tumor_bed(std::int64_t u, std::int64_t v) const {
        return d_step_ * static_cast<double>(u) + tumor_quad_ * static_cast<double>(v);
    }

    [[nodiscard]] bool floor_ok(std::int64_t u, std::int64_t v) const {
        return tumor_bed(u, v) >= floor_ - kConstraintTol;
    }

    [[nodiscard]] double floor() const { return floor_; }

    /// Largest v <= v_cap with oar_ok(u, v), or -1 when there is none.
    [[nodiscard]] std::int64_t max_v(std::int64_t u, std::int64_t v_cap) const {
        double bound = static_cast<double>(v_cap);
        for (const auto& o : oars_) {
            bound = std::min(bound, (o.cap + kConstraintTol - o.lin * static_cast<double>(u)) / o.quad);
        }
        auto v = static_cast<std::int64_t>(std::clamp(std::floor(bound), -1.0, static_cast<double>(v_cap)));
        while (v >= 0 && !oar_ok(u, v)) --v;
        while (v < v_cap && oar_ok(u, v + 1)) ++v;
        return v;
    }

    /// Smallest v >= 0 with floor_ok(u, v); v_cap + 1 when there is none up to v_cap.
    [[nodiscard]] std::int64_t min_v(std::int64_t u, std::int64_t v_cap) const {
        const double need = (floor_ - kConstraintTol - d_step_ * static_cast<double>(u)) / tumor_quad_;
        auto v = static_cast<std::int64_t>(std::clamp(std::ceil(need), 0.0, static_cast<double>(v_cap + 1)));
        while (v <= v_cap && !floor_ok(u, v)) ++v;
        while (v > 0 && floor_ok(u, v - 1)) --v;
        return v;
    }

private:
    struct Oar {
        double lin;
        double quad;
        double cap;
    };
    double d_step_;
    double floor_;
    double tumor_quad_ = 0.0;
    std::vector<Oar> oars_;
};

}  // namespace crt::dp::detail
