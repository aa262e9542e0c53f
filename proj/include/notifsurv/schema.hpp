#pragma once

// Feature schema: the ordered slot layout shared by observations, models and
// scoring contexts.

#include "notifsurv/detail/hash.hpp"
#include "notifsurv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace notifsurv {

enum class SlotKind {
    Intercept,      // constant 1
    Raw,            // taken by name from the event's feature map (profile / external activity)
    BadgeCount,     // state: badge count after the send
    StateAge,       // state: hours since the state started (w0-derived, reset by a send)
    VisitsPastWeek, // activity: visits in the preceding 168 h
    SendsPastWeek,  // activity: sends in the preceding 168 h
    Interaction,    // product of two parent slots
};

inline std::string_view to_string(SlotKind k)
{
    switch (k) {
    case SlotKind::Intercept: return "intercept";
    case SlotKind::Raw: return "raw";
    case SlotKind::BadgeCount: return "badge_count";
    case SlotKind::StateAge: return "state_age";
    case SlotKind::VisitsPastWeek: return "visits_past_week";
    case SlotKind::SendsPastWeek: return "sends_past_week";
    case SlotKind::Interaction: return "interaction";
    }
    return "?";
}

inline SlotKind slot_kind_from_string(std::string_view s)
{
    for (auto k : {SlotKind::Intercept, SlotKind::Raw, SlotKind::BadgeCount, SlotKind::StateAge,
                   SlotKind::VisitsPastWeek, SlotKind::SendsPastWeek, SlotKind::Interaction}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw ConfigError("unknown feature slot kind '" + std::string(s) + "'");
}

struct Slot {
    std::string name;
    SlotKind kind = SlotKind::Raw;
    std::vector<std::string> parents; // interaction slots only
    bool online = false;              // raw slots only; other kinds have a fixed placement
};

/// Snapshot of a user's state at a send, from which non-raw slots are filled.
struct StateSnapshot {
    double badge_count = 0.0;
    double state_age_hours = 0.0;
    double visits_past_week = 0.0;
    double sends_past_week = 0.0;
};

struct FeatureVector {
    std::vector<double> values;
    std::string schema_id;
};

/// Disjoint cover of slot indices: offline slots are precomputable in batch,
/// online slots change in real time.
struct SlotPartition {
    std::vector<std::size_t> offline;
    std::vector<std::size_t> online;
};

class FeatureSchema {
public:
    FeatureSchema() = default;

    explicit FeatureSchema(std::vector<Slot> slots) : slots_(std::move(slots)) { index(); }

    [[nodiscard]] const std::vector<Slot>& slots() const noexcept { return slots_; }
    [[nodiscard]] std::size_t size() const noexcept { return slots_.size(); }
    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] std::size_t intercept_index() const noexcept { return intercept_; }

    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const
    {
        auto it = by_name_.find(std::string(name));
        if (it == by_name_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::vector<std::string> names() const
    {
        std::vector<std::string> out;
        out.reserve(slots_.size());
        for (const auto& s : slots_) {
            out.push_back(s.name);
        }
        return out;
    }

    /// Indices of the two parents of an interaction slot.
    [[nodiscard]] const std::vector<std::pair<std::size_t, std::size_t>>& interaction_parents() const noexcept
    {
        return parents_;
    }

    [[nodiscard]] bool has_state_slots() const
    {
        return std::any_of(slots_.begin(), slots_.end(), [](const Slot& s) {
            return s.kind == SlotKind::BadgeCount || s.kind == SlotKind::StateAge;
        });
    }

    [[nodiscard]] bool is_online(std::size_t i) const
    {
        const Slot& s = slots_.at(i);
        switch (s.kind) {
        case SlotKind::Intercept: return false;
        case SlotKind::Raw: return s.online;
        case SlotKind::Interaction: return is_online(parent_index(s.parents[0])) || is_online(parent_index(s.parents[1]));
        default: return true;
        }
    }

    /// Offline/online split implied by the slot kinds.
    [[nodiscard]] SlotPartition default_partition() const
    {
        SlotPartition p;
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            (is_online(i) ? p.online : p.offline).push_back(i);
        }
        return p;
    }

    /// Throws ConfigError if `p` overlaps, misses a slot, or places an
    /// interaction with an online parent offline.
    void validate_partition(const SlotPartition& p) const
    {
        std::vector<int> seen(slots_.size(), 0);
        for (auto* side : {&p.offline, &p.online}) {
            for (std::size_t i : *side) {
                if (i >= slots_.size()) {
                    throw ConfigError("partition references slot index " + std::to_string(i) + " out of range");
                }
                if (++seen[i] > 1) {
                    throw ConfigError("partition assigns slot '" + slots_[i].name + "' to both sides");
                }
            }
        }
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            if (seen[i] == 0) {
                throw ConfigError("partition does not cover slot '" + slots_[i].name + "'");
            }
        }
        for (std::size_t i : p.offline) {
            if (slots_[i].kind == SlotKind::Interaction && is_online(i)) {
                throw ConfigError("interaction slot '" + slots_[i].name
                                  + "' has an online parent and must be placed online");
            }
        }
    }

    /// Builds the full vector from raw features and a state snapshot.
    [[nodiscard]] FeatureVector materialize(const std::map<std::string, double>& raw, const StateSnapshot& st) const
    {
        FeatureVector fv{std::vector<double>(slots_.size(), 0.0), id_};
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            const Slot& s = slots_[i];
            switch (s.kind) {
            case SlotKind::Intercept: fv.values[i] = 1.0; break;
            case SlotKind::Raw: {
                auto it = raw.find(s.name);
                if (it == raw.end()) {
                    throw DataError("schema mismatch: raw feature '" + s.name + "' missing from event");
                }
                fv.values[i] = it->second;
                break;
            }
            case SlotKind::BadgeCount: fv.values[i] = st.badge_count; break;
            case SlotKind::StateAge: fv.values[i] = st.state_age_hours; break;
            case SlotKind::VisitsPastWeek: fv.values[i] = st.visits_past_week; break;
            case SlotKind::SendsPastWeek: fv.values[i] = st.sends_past_week; break;
            case SlotKind::Interaction: break;
            }
        }
        recompute_interactions(fv.values);
        for (std::size_t i = 0; i < fv.values.size(); ++i) {
            if (!std::isfinite(fv.values[i])) {
                throw DataError("non-finite value in feature slot '" + slots_[i].name + "'");
            }
        }
        return fv;
    }

    void recompute_interactions(std::span<double> values) const
    {
        for (std::size_t k = 0; k < interaction_slots_.size(); ++k) {
            const auto [a, b] = parents_[k];
            values[interaction_slots_[k]] = values[a] * values[b];
        }
    }

    [[nodiscard]] const std::vector<std::size_t>& interaction_slots() const noexcept { return interaction_slots_; }

    void check_vector(const FeatureVector& fv) const
    {
        if (fv.values.size() != slots_.size()) {
            throw DataError("schema mismatch: vector has " + std::to_string(fv.values.size()) + " slots, schema "
                            + std::to_string(slots_.size()));
        }
        if (!fv.schema_id.empty() && fv.schema_id != id_) {
            throw DataError("schema mismatch: vector schema id " + fv.schema_id + " != " + id_);
        }
    }

    /// Default layout: intercept, profile slots, badge count, and one
    /// badge x first-profile interaction.
    static FeatureSchema standard(const std::vector<std::string>& profile_names, bool with_interaction = true)
    {
        std::vector<Slot> s;
        s.push_back({"intercept", SlotKind::Intercept, {}, false});
        for (const auto& n : profile_names) {
            s.push_back({n, SlotKind::Raw, {}, false});
        }
        s.push_back({"badge_count", SlotKind::BadgeCount, {}, true});
        if (with_interaction && !profile_names.empty()) {
            s.push_back({"badge_count*" + profile_names.front(), SlotKind::Interaction,
                         {"badge_count", profile_names.front()}, true});
        }
        return FeatureSchema(std::move(s));
    }

private:
    std::size_t parent_index(const std::string& name) const { return by_name_.at(name); }

    void index()
    {
        by_name_.clear();
        parents_.clear();
        interaction_slots_.clear();
        std::size_t intercepts = 0;
        std::string canon;
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            const Slot& s = slots_[i];
            if (s.name.empty()) {
                throw ConfigError("feature slot " + std::to_string(i) + " has an empty name");
            }
            if (!by_name_.emplace(s.name, i).second) {
                throw ConfigError("duplicate feature slot name '" + s.name + "'");
            }
            if (s.kind == SlotKind::Intercept) {
                intercept_ = i;
                ++intercepts;
            }
            canon += s.name;
            canon += '|';
            canon += to_string(s.kind);
            for (const auto& p : s.parents) {
                canon += '|';
                canon += p;
            }
            canon += s.online ? "|on;" : "|off;";
        }
        if (intercepts != 1) {
            throw ConfigError("feature schema must contain exactly one intercept slot");
        }
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            const Slot& s = slots_[i];
            if (s.kind != SlotKind::Interaction) {
                continue;
            }
            if (s.parents.size() != 2) {
                throw ConfigError("interaction slot '" + s.name + "' needs exactly two parents");
            }
            std::size_t idx[2];
            for (int k = 0; k < 2; ++k) {
                auto it = by_name_.find(s.parents[k]);
                if (it == by_name_.end()) {
                    throw ConfigError("interaction slot '" + s.name + "' references unknown parent '" + s.parents[k] + "'");
                }
                if (slots_[it->second].kind == SlotKind::Interaction) {
                    throw ConfigError("interaction slot '" + s.name + "' cannot have an interaction parent");
                }
                idx[k] = it->second;
            }
            interaction_slots_.push_back(i);
            parents_.emplace_back(idx[0], idx[1]);
        }
        id_ = detail::hex64(detail::fnv1a64(canon));
    }

    std::vector<Slot> slots_;
    std::map<std::string, std::size_t> by_name_;
    std::vector<std::pair<std::size_t, std::size_t>> parents_;
    std::vector<std::size_t> interaction_slots_;
    std::size_t intercept_ = 0;
    std::string id_;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

} // namespace notifsurv
