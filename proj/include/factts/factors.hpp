#pragma once

#include <string>

#include "factts/linalg.hpp"

namespace factts {

// The eight model architectures. The serial models come in two orders:
// sm_se factors speakers in the last hidden layer and emotions in the output
// layer, sm_es the reverse. sed is the plain per-cell baseline.
enum class ArchKind {
    pm,
    sm_se,
    sm_es,
    aim,
    pm_aim,
    sm_se_aim,
    sm_es_aim,
    sed,
};

std::string to_string(ArchKind k);
ArchKind arch_from_string(const std::string& s);

// Which layer an auxiliary vector conditions.
enum class Placement { input, last_hidden, output };

std::string to_string(Placement p);

// 1-based emotion selector with an explicit neutral state. Neutral is not
// index 0: it maps to the all-zero emotion ID and can never collide with a
// real emotion index.
class EmotionIndex {
public:
    static EmotionIndex neutral() { return EmotionIndex(0); }
    static EmotionIndex at(int one_based);

    bool is_neutral() const { return raw_ == 0; }
    int index() const;  // 1-based; only valid when not neutral

    bool operator==(const EmotionIndex&) const = default;

private:
    explicit EmotionIndex(int raw) : raw_(raw) {}
    int raw_;
};

// One-hot emotion identity; the all-zero vector denotes neutral.
struct EmotionId {
    Vector values;
    std::size_t size() const { return values.size(); }
};

// One-hot speaker identity; exactly one entry is 1.
struct SpeakerId {
    Vector values;
    std::size_t size() const { return values.size(); }
};

// Per-layer auxiliary vector. For factored placements the trailing entry is
// the shared-branch weight and equals 1 when built from one-hot IDs; layers
// accept arbitrary (soft) values for interpolation experiments.
struct AuxVector {
    Vector values;
    Placement placement;
    std::size_t size() const { return values.size(); }
};

// Indicator vector of length total_emotions; neutral yields all zeros.
EmotionId emotion_id(EmotionIndex which, int total_emotions);

// Indicator vector of length total_speakers with a 1 at (1-based) speaker.
SpeakerId speaker_id(int speaker, int total_speakers);

// The auxiliary vector an architecture feeds to the layer at `where`.
// Throws InvalidPlacement when the architecture has no aux at that layer.
AuxVector layer_aux(ArchKind arch, Placement where, const EmotionId& e, const SpeakerId& s);

// True if `arch` conditions the layer at `where` on an auxiliary vector.
bool has_aux(ArchKind arch, Placement where);

}  // namespace factts
